//! Append-only session log. Each line is one JSON event; replaying the
//! file from the start rebuilds every session.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use geodoc_core::GuidanceMode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    Created {
        session_id: String,
        scene_id: String,
        mode: GuidanceMode,
        at: DateTime<Utc>,
    },
    Viewed {
        session_id: String,
        document_id: String,
        at: DateTime<Utc>,
    },
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    /// Open or create the log and return the events already in it.
    ///
    /// A partial last line left by a crash mid-write is cut off.
    pub fn open(path: impl AsRef<Path>) -> io::Result<(Self, Vec<JournalEvent>)> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;

        let mut events = Vec::new();
        let mut complete_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if !line.ends_with('\n') {
                tracing::warn!(path = %path.display(), line_no, "dropping incomplete journal line");
                break;
            }
            complete_len += n as u64;
            match serde_json::from_str(line.trim_end()) {
                Ok(event) => events.push(event),
                Err(e) if line.trim().is_empty() => drop(e),
                Err(e) => {
                    tracing::warn!(path = %path.display(), line_no, error = %e, "skipping unreadable journal line")
                }
            }
        }
        drop(reader);
        if file.metadata()?.len() != complete_len {
            file.set_len(complete_len)?;
            file.seek(io::SeekFrom::End(0))?;
        }
        Ok((
            Self {
                path,
                file: Mutex::new(file),
            },
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Write one event and hand it to the OS before returning.
    pub fn append(&self, event: &JournalEvent) -> io::Result<()> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line)?;
        file.flush()
    }

    pub fn sync(&self) -> io::Result<()> {
        self.file
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .sync_all()
    }
}
