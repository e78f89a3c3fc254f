use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::StorageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Events,
    Bins,
}

impl Namespace {
    fn dir(self) -> &'static str {
        match self {
            Namespace::Events => "events",
            Namespace::Bins => "bins",
        }
    }
}

/// Stream ids become file names.
pub fn valid_stream_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn check_id(id: &str) -> Result<(), StorageError> {
    if valid_stream_id(id) {
        Ok(())
    } else {
        Err(StorageError::StorageFailure(format!("invalid stream id `{id}`")))
    }
}

/// Line-oriented append-only storage.
///
/// `append` must reject any `seq` other than the current length + 1 with
/// [`StorageError::SequenceConflict`], which is how concurrent writers of one
/// stream are detected.
pub trait LogBackend: Send + Sync {
    fn append(&self, ns: Namespace, id: &str, seq: u64, line: &str) -> Result<(), StorageError>;

    /// All lines of a stream, or `None` if it was never written.
    fn read(&self, ns: Namespace, id: &str) -> Result<Option<Vec<String>>, StorageError>;

    /// Ids of all streams in a namespace, sorted.
    fn streams(&self, ns: Namespace) -> Result<Vec<String>, StorageError>;
}

#[derive(Debug, Default)]
pub struct MemoryLog {
    streams: Mutex<BTreeMap<(Namespace, String), Vec<String>>>,
}

impl MemoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces a stream wholesale. Test hook for corrupting logs.
    pub fn overwrite(&self, ns: Namespace, id: &str, lines: Vec<String>) {
        self.streams.lock().unwrap().insert((ns, id.to_owned()), lines);
    }
}

impl LogBackend for MemoryLog {
    fn append(&self, ns: Namespace, id: &str, seq: u64, line: &str) -> Result<(), StorageError> {
        check_id(id)?;
        let mut streams = self.streams.lock().unwrap();
        let lines = streams.entry((ns, id.to_owned())).or_default();
        let expected = lines.len() as u64 + 1;
        if seq != expected {
            return Err(StorageError::SequenceConflict { expected, got: seq });
        }
        lines.push(line.to_owned());
        Ok(())
    }

    fn read(&self, ns: Namespace, id: &str) -> Result<Option<Vec<String>>, StorageError> {
        Ok(self.streams.lock().unwrap().get(&(ns, id.to_owned())).cloned())
    }

    fn streams(&self, ns: Namespace) -> Result<Vec<String>, StorageError> {
        Ok(self
            .streams
            .lock()
            .unwrap()
            .keys()
            .filter(|(n, _)| *n == ns)
            .map(|(_, id)| id.clone())
            .collect())
    }
}

/// One `<root>/<namespace>/<id>.log` file per stream, fsynced on every append.
#[derive(Debug)]
pub struct FileLog {
    root: PathBuf,
    lengths: Mutex<HashMap<(Namespace, String), u64>>,
}

impl FileLog {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        for ns in [Namespace::Events, Namespace::Bins] {
            fs::create_dir_all(root.join(ns.dir()))?;
        }
        Ok(Self {
            root,
            lengths: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, ns: Namespace, id: &str) -> PathBuf {
        self.root.join(ns.dir()).join(format!("{id}.log"))
    }

    fn read_lines(path: &Path) -> Result<Option<Vec<String>>, StorageError> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let lines = BufReader::new(file).lines().collect::<Result<Vec<_>, _>>()?;
        Ok(Some(lines))
    }
}

impl LogBackend for FileLog {
    fn append(&self, ns: Namespace, id: &str, seq: u64, line: &str) -> Result<(), StorageError> {
        check_id(id)?;
        if line.contains('\n') {
            return Err(StorageError::StorageFailure("record spans several lines".into()));
        }
        let path = self.path(ns, id);
        let mut lengths = self.lengths.lock().unwrap();
        let key = (ns, id.to_owned());
        let len = match lengths.get(&key) {
            Some(n) => *n,
            None => Self::read_lines(&path)?.map_or(0, |l| l.len() as u64),
        };
        if seq != len + 1 {
            return Err(StorageError::SequenceConflict {
                expected: len + 1,
                got: seq,
            });
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
        file.sync_data()?;
        lengths.insert(key, seq);
        Ok(())
    }

    fn read(&self, ns: Namespace, id: &str) -> Result<Option<Vec<String>>, StorageError> {
        check_id(id)?;
        Self::read_lines(&self.path(ns, id))
    }

    fn streams(&self, ns: Namespace) -> Result<Vec<String>, StorageError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(ns.dir()))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "log") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    if valid_stream_id(stem) {
                        ids.push(stem.to_owned());
                    }
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}
