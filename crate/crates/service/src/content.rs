//! Content-addressed blob store on the local filesystem.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::io::{AsyncReadExt, AsyncSeekExt};

/// Hex SHA-256 of the stored bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContentKey(String);

impl ContentKey {
    pub fn of(bytes: &[u8]) -> Self {
        ContentKey(hex::encode(Sha256::digest(bytes)))
    }

    /// Accepts `sha256:<hex>` or bare hex.
    pub fn parse(text: &str) -> Option<Self> {
        let hex_part = text.strip_prefix("sha256:").unwrap_or(text);
        (hex_part.len() == 64 && hex_part.bytes().all(|b| b.is_ascii_hexdigit()))
            .then(|| ContentKey(hex_part.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentEntry {
    pub key: ContentKey,
    pub media_type: String,
    pub length: u64,
}

#[derive(Debug, Clone)]
pub struct ContentStore {
    root: PathBuf,
}

impl ContentStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    fn blob_path(&self, key: &ContentKey) -> PathBuf {
        self.root.join(key.as_str())
    }

    fn meta_path(&self, key: &ContentKey) -> PathBuf {
        self.root.join(format!("{}.meta.json", key.as_str()))
    }

    /// Store `bytes`; an existing blob with the same key is left untouched.
    pub fn put(&self, bytes: &[u8], media_type: &str) -> io::Result<ContentEntry> {
        let key = ContentKey::of(bytes);
        let entry = ContentEntry {
            key: key.clone(),
            media_type: media_type.to_string(),
            length: bytes.len() as u64,
        };
        let blob = self.blob_path(&key);
        if !blob.exists() {
            write_atomically(&blob, bytes)?;
        }
        let meta = self.meta_path(&key);
        if !meta.exists() {
            write_atomically(&meta, &serde_json::to_vec(&entry)?)?;
        }
        Ok(entry)
    }

    pub fn entry(&self, key: &ContentKey) -> io::Result<Option<ContentEntry>> {
        match std::fs::read(self.meta_path(key)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub async fn read(&self, key: &ContentKey) -> io::Result<Vec<u8>> {
        tokio::fs::read(self.blob_path(key)).await
    }

    /// Bytes `start..=end` of a blob.
    pub async fn read_range(&self, key: &ContentKey, start: u64, end: u64) -> io::Result<Vec<u8>> {
        let mut file = tokio::fs::File::open(self.blob_path(key)).await?;
        file.seek(io::SeekFrom::Start(start)).await?;
        let mut buf = vec![0; (end - start + 1) as usize];
        file.read_exact(&mut buf).await?;
        Ok(buf)
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Media type from a file extension.
pub fn media_type_for(path: &str) -> Option<&'static str> {
    let ext = path.rsplit_once('.')?.1.to_ascii_lowercase();
    Some(match ext.as_str() {
        "jpg" | "jpeg" => "image/jpeg",
        "png" => "image/png",
        "gif" => "image/gif",
        "webp" => "image/webp",
        "svg" => "image/svg+xml",
        "bmp" => "image/bmp",
        "tif" | "tiff" => "image/tiff",
        "mp4" | "m4v" => "video/mp4",
        "webm" => "video/webm",
        "ogv" => "video/ogg",
        "mov" => "video/quicktime",
        "pdf" => "application/pdf",
        "txt" => "text/plain; charset=utf-8",
        "md" => "text/markdown; charset=utf-8",
        "html" | "htm" => "text/html; charset=utf-8",
        "json" => "application/json",
        _ => return None,
    })
}
