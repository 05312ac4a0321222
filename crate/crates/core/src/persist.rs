//! Persistence: append-only command journal plus canonical snapshots.
//!
//! The journal is the source of truth. Every successfully applied command
//! appends one JSON line `{"seq":…,"command":…,"result_ids":…}`; replaying
//! a journal from an empty store reproduces the live store exactly,
//! including counters, and replay verifies that each command minted the
//! very ids the journal recorded.
//!
//! A snapshot is a canonical byte-exact serialization: a meta line carrying
//! the counters and section counts, then every node, relationship, chain,
//! and inbox in key order. Dumping the same store twice yields identical
//! bytes. Loading validates strictly — syntax, section counts, and the
//! full structural audit — and answers `CorruptSnapshot` rather than
//! panicking on damaged input. A snapshot plus the journal records past its
//! sequence number equals the journal replayed from scratch.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandOutput, Engine, Record};
use crate::error::{Error, Result};
use crate::graph::Store;
use crate::command::Query;

pub const SNAPSHOT_FORMAT: u32 = 1;

/// One journal line: the command, the sequence it committed at, and the ids
/// it minted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub seq: u64,
    pub command: Command,
    pub result_ids: Vec<String>,
}

/// Serializes the store as canonical snapshot bytes.
pub fn snapshot_string(store: &Store) -> String {
    let mut lines = Vec::new();
    lines.push(
        Record::Meta {
            format: SNAPSHOT_FORMAT,
            last_sequence: store.op_counter,
            node_counter: store.node_counter,
            rel_counter: store.rel_counter,
            event_counter: store.event_counter,
            nodes: store.nodes.len() as u64,
            rels: store.rels.len() as u64,
            chains: store.chains.len() as u64,
            inboxes: store.inboxes.len() as u64,
        }
        .to_line(),
    );
    for node in store.nodes.values() {
        lines.push(Record::Node(node.clone()).to_line());
    }
    for rel in store.rels.values() {
        lines.push(Record::Rel(rel.clone()).to_line());
    }
    for chain in store.chains.values() {
        lines.push(Record::Chain(chain.clone()).to_line());
    }
    for (node, events) in &store.inboxes {
        lines.push(
            Record::Inbox {
                node: node.clone(),
                events: events.clone(),
            }
            .to_line(),
        );
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Parses canonical snapshot bytes back into a store, validating strictly.
pub fn parse_snapshot(text: &str) -> Result<Store> {
    let corrupt = |line: usize, reason: String| Error::CorruptSnapshot { line, reason };
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| corrupt(1, "empty snapshot".to_string()))?;
    let meta: Record = serde_json::from_str(first)
        .map_err(|e| corrupt(1, format!("bad meta line: {e}")))?;
    let Record::Meta {
        format,
        last_sequence,
        node_counter,
        rel_counter,
        event_counter,
        nodes,
        rels,
        chains,
        inboxes,
    } = meta
    else {
        return Err(corrupt(1, "first line is not a meta record".to_string()));
    };
    if format != SNAPSHOT_FORMAT {
        return Err(corrupt(1, format!("unsupported snapshot format {format}")));
    }
    let mut store = Store {
        node_counter,
        rel_counter,
        event_counter,
        op_counter: last_sequence,
        ..Store::default()
    };
    for (idx, line) in lines {
        let lineno = idx + 1;
        let record: Record = serde_json::from_str(line)
            .map_err(|e| corrupt(lineno, format!("bad record: {e}")))?;
        match record {
            Record::Node(node) => {
                if store.nodes.insert(node.id.clone(), node).is_some() {
                    return Err(corrupt(lineno, "duplicate node id".to_string()));
                }
            }
            Record::Rel(rel) => {
                if store.rels.insert(rel.id.clone(), rel).is_some() {
                    return Err(corrupt(lineno, "duplicate relationship id".to_string()));
                }
            }
            Record::Chain(chain) => {
                if store.chains.insert(chain.name.clone(), chain).is_some() {
                    return Err(corrupt(lineno, "duplicate chain name".to_string()));
                }
            }
            Record::Inbox { node, events } => {
                if store.inboxes.insert(node, events).is_some() {
                    return Err(corrupt(lineno, "duplicate inbox".to_string()));
                }
            }
            other => {
                return Err(corrupt(
                    lineno,
                    format!("unexpected record in snapshot: {}", other.to_line()),
                ));
            }
        }
    }
    let counts = [
        ("node", nodes, store.nodes.len() as u64),
        ("relationship", rels, store.rels.len() as u64),
        ("chain", chains, store.chains.len() as u64),
        ("inbox", inboxes, store.inboxes.len() as u64),
    ];
    for (what, declared, found) in counts {
        if declared != found {
            return Err(corrupt(
                0,
                format!("meta declares {declared} {what} lines, found {found}"),
            ));
        }
    }
    let violations = store.audit();
    if let Some(first) = violations.first() {
        return Err(corrupt(0, format!("audit failed: {first}")));
    }
    Ok(store)
}

/// Writes a snapshot of `store` to `path`, answering the byte count.
pub fn write_snapshot(store: &Store, path: &Path) -> Result<u64> {
    let bytes = snapshot_string(store);
    fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

/// Reads and validates the snapshot at `path`.
pub fn load_snapshot(path: &Path) -> Result<Store> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::IoFailure(format!("reading {}: {e}", path.display())))?;
    parse_snapshot(&text)
}

/// Reads all journal records at `path`; a missing journal is empty.
pub fn read_journal(path: &Path) -> Result<Vec<JournalRecord>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::IoFailure(format!("reading {}: {e}", path.display()))),
    };
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let record: JournalRecord =
            serde_json::from_str(line).map_err(|e| Error::CorruptJournal {
                line: idx + 1,
                reason: format!("bad record: {e}"),
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Replays journal records on top of `store`, which is at sequence
/// `store.last_sequence()`.
///
/// Records must be contiguous and must start at or before the store's next
/// sequence; records at or below the store's sequence are already reflected
/// and are skipped. Replayed commands must succeed and must mint exactly
/// the ids the journal recorded.
pub fn replay_onto(store: &mut Store, records: &[JournalRecord]) -> Result<()> {
    let base = store.last_sequence();
    let mut prev: Option<u64> = None;
    for (idx, record) in records.iter().enumerate() {
        let lineno = idx + 1;
        match prev {
            Some(p) if record.seq != p + 1 => {
                return Err(Error::GapInJournal {
                    expected: p + 1,
                    found: record.seq,
                });
            }
            None if record.seq > base + 1 => {
                return Err(Error::GapInJournal {
                    expected: base + 1,
                    found: record.seq,
                });
            }
            _ => {}
        }
        prev = Some(record.seq);
        if record.seq <= base {
            continue;
        }
        let out = store.execute(&record.command).map_err(|e| Error::CorruptJournal {
            line: lineno,
            reason: format!("command failed on replay: {e}"),
        })?;
        if store.last_sequence() != record.seq {
            return Err(Error::CorruptJournal {
                line: lineno,
                reason: format!(
                    "sequence drift: store at {}, record at {}",
                    store.last_sequence(),
                    record.seq
                ),
            });
        }
        if out.result_ids != record.result_ids {
            return Err(Error::CorruptJournal {
                line: lineno,
                reason: format!(
                    "replay minted {:?}, journal recorded {:?}",
                    out.result_ids, record.result_ids
                ),
            });
        }
    }
    Ok(())
}

/// Replays a complete journal from an empty store.
pub fn replay(records: &[JournalRecord]) -> Result<Store> {
    let mut store = Store::new();
    replay_onto(&mut store, records)?;
    Ok(store)
}

/// A store bound to its snapshot and journal files.
///
/// Opening loads the snapshot (if present) and replays the journal tail;
/// every applied command is appended to the journal before the call
/// answers. Snapshots are written only on explicit `dump`.
#[derive(Debug)]
pub struct PersistentStore {
    store: Store,
    snapshot_path: PathBuf,
    journal_path: PathBuf,
}

impl PersistentStore {
    pub fn open(snapshot_path: impl Into<PathBuf>, journal_path: impl Into<PathBuf>) -> Result<Self> {
        let snapshot_path = snapshot_path.into();
        let journal_path = journal_path.into();
        let mut store = if snapshot_path.exists() {
            load_snapshot(&snapshot_path)?
        } else {
            Store::new()
        };
        let records = read_journal(&journal_path)?;
        replay_onto(&mut store, &records)?;
        Ok(PersistentStore {
            store,
            snapshot_path,
            journal_path,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn snapshot_path(&self) -> &Path {
        &self.snapshot_path
    }

    pub fn journal_path(&self) -> &Path {
        &self.journal_path
    }

    fn append_journal(&self, record: &JournalRecord) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.journal_path)
            .map_err(|e| {
                Error::IoFailure(format!("opening {}: {e}", self.journal_path.display()))
            })?;
        let mut line = serde_json::to_string(record).expect("journal records serialize");
        line.push('\n');
        file.write_all(line.as_bytes())
            .map_err(|e| Error::IoFailure(format!("appending {}: {e}", self.journal_path.display())))?;
        file.flush()
            .map_err(|e| Error::IoFailure(format!("flushing {}: {e}", self.journal_path.display())))?;
        Ok(())
    }

    /// Applies a command and journals it.
    pub fn execute(&mut self, cmd: &Command) -> Result<CommandOutput> {
        let out = self.store.execute(cmd)?;
        let record = JournalRecord {
            seq: self.store.last_sequence(),
            command: cmd.clone(),
            result_ids: out.result_ids.clone(),
        };
        self.append_journal(&record)?;
        Ok(out)
    }

    /// Writes a snapshot to `path`, or to the bound snapshot path.
    pub fn dump(&self, path: Option<&Path>) -> Result<Record> {
        let target = path.unwrap_or(&self.snapshot_path);
        let bytes = write_snapshot(&self.store, target)?;
        Ok(Record::Dumped {
            path: target.display().to_string(),
            bytes,
        })
    }

    /// Replaces the store with the snapshot at `path`: the snapshot is
    /// copied to the bound snapshot path and the journal is truncated, so
    /// the imported state becomes the new baseline.
    pub fn import(&mut self, path: &Path) -> Result<Record> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::IoFailure(format!("reading {}: {e}", path.display())))?;
        self.import_text(&text, &path.display().to_string())
    }

    /// Same as [`PersistentStore::import`], but from snapshot text already
    /// in hand — the shape the server receives over HTTP. `label` names
    /// the source in the answer record.
    pub fn import_text(&mut self, text: &str, label: &str) -> Result<Record> {
        let store = parse_snapshot(text)?;
        write_snapshot(&store, &self.snapshot_path)?;
        match fs::remove_file(&self.journal_path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => {
                return Err(Error::IoFailure(format!(
                    "truncating {}: {e}",
                    self.journal_path.display()
                )));
            }
        }
        let record = Record::Loaded {
            path: label.to_string(),
            nodes: store.node_count() as u64,
            rels: store.rel_count() as u64,
            chains: store.chain_count() as u64,
            last_sequence: store.last_sequence(),
        };
        self.store = store;
        Ok(record)
    }
}

impl Engine for PersistentStore {
    fn execute(&mut self, cmd: &Command) -> Result<CommandOutput> {
        PersistentStore::execute(self, cmd)
    }

    fn query(&self, q: &Query) -> Result<Vec<Record>> {
        self.store.run_query(q)
    }
}
