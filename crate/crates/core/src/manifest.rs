//! JSONL manifests: one [`SampleRecord`] per line.
//!
//! Row keys are exactly `id, path, label, class_name, source, split, weight,
//! meta`, written in that order. Strict parsing rejects any other key; lax
//! parsing keeps unknown keys and writes them back after `meta`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub type Meta = BTreeMap<String, Value>;

/// Meta keys that only synthetic rows may carry.
pub const GENERATION_META_KEYS: [&str; 5] = ["material", "defect_kind", "location_index", "shot_index", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),* }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)*
                    _ => Err(Error::Config(format!(concat!("unknown ", stringify!($ty), " {:?}"), s))),
                }
            }
        }
    };
}

string_enum!(Source { Real => "real", Synthetic => "synthetic" });
string_enum!(Split { Train => "train", Val => "val", Test => "test", Unassigned => "unassigned" });

/// One image of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub id: String,
    pub path: String,
    pub label: u8,
    pub class_name: String,
    pub source: Source,
    pub split: Split,
    pub weight: f64,
    pub meta: Meta,
    /// Unknown keys retained by lax parsing.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, path: impl Into<String>, label: u8, source: Source) -> Self {
        SampleRecord {
            id: id.into(),
            path: path.into(),
            label,
            class_name: if label == 1 { "good" } else { "defect" }.to_string(),
            source,
            split: Split::Unassigned,
            weight: 1.0,
            meta: Meta::new(),
            extra: BTreeMap::new(),
        }
    }

    /// String form of a meta value (strings unquoted), for stratification.
    pub fn meta_str(&self, key: &str) -> Option<String> {
        self.meta.get(key).map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    pub fn meta_u64(&self, key: &str) -> Option<u64> {
        self.meta.get(key).and_then(Value::as_u64)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.label > 1 {
            return Err(format!("label must be 0 or 1, got {}", self.label));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(format!("weight must be positive, got {}", self.weight));
        }
        if self.source == Source::Real {
            if let Some(k) = GENERATION_META_KEYS.iter().find(|k| self.meta.contains_key(**k)) {
                return Err(format!("real row carries generation meta key {k:?}"));
            }
        }
        Ok(())
    }

    fn from_object(mut obj: Map<String, Value>, mode: ParseMode) -> std::result::Result<Self, String> {
        fn take<T: for<'de> Deserialize<'de>>(
            obj: &mut Map<String, Value>,
            key: &str,
        ) -> std::result::Result<T, String> {
            let v = obj.remove(key).ok_or_else(|| format!("missing key {key:?}"))?;
            serde_json::from_value(v).map_err(|e| format!("key {key:?}: {e}"))
        }
        let record = SampleRecord {
            id: take(&mut obj, "id")?,
            path: take(&mut obj, "path")?,
            label: take(&mut obj, "label")?,
            class_name: take(&mut obj, "class_name")?,
            source: take(&mut obj, "source")?,
            split: take(&mut obj, "split")?,
            weight: take(&mut obj, "weight")?,
            meta: take(&mut obj, "meta")?,
            extra: BTreeMap::new(),
        };
        if mode == ParseMode::Strict {
            if let Some(k) = obj.keys().next() {
                return Err(format!("unknown key {k:?}"));
            }
        }
        if let Some(Value::Object(_) | Value::Array(_)) = record.meta.values().find(|v| v.is_object() || v.is_array()) {
            return Err("meta must be a flat map of scalars".into());
        }
        Ok(SampleRecord {
            extra: obj.into_iter().collect(),
            ..record
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lax,
}

/// An ordered list of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<SampleRecord>,
}

impl Manifest {
    pub fn new(rows: Vec<SampleRecord>) -> Result<Self> {
        let m = Manifest { rows };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.rows.len());
        for r in &self.rows {
            r.validate().map_err(|e| Error::Config(format!("row {}: {e}", r.id)))?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Config(format!("duplicate id {:?}", r.id)));
            }
        }
        Ok(())
    }

    /// Parses JSONL text; `origin` names the input in error messages.
    pub fn parse(text: &str, mode: ParseMode, origin: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let schema = |msg: String| Error::Schema {
                path: origin.to_string(),
                line: n as u64 + 1,
                msg,
            };
            let obj: Map<String, Value> = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
            let row = SampleRecord::from_object(obj, mode).map_err(schema)?;
            row.validate().map_err(schema)?;
            if !seen.insert(row.id.clone()) {
                return Err(schema(format!("duplicate id {:?}", row.id)));
            }
            rows.push(row);
        }
        Ok(Manifest { rows })
    }

    pub fn read(path: &Path, mode: ParseMode) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, mode, &path.display().to_string())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    /// Rewrites relative image paths as `base/path`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for r in &mut self.rows {
            if Path::new(&r.path).is_relative() && !base.as_os_str().is_empty() {
                r.path = base.join(&r.path).to_string_lossy().into_owned();
            }
        }
    }

    pub fn get(&self, id: &str) -> Option<&SampleRecord> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Id → row index lookup.
    pub fn index(&self) -> BTreeMap<&str, usize> {
        self.rows.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect()
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(id: &str) -> SampleRecord {
        let mut r = SampleRecord::new(id, format!("images/{id}.png"), 0, Source::Synthetic);
        r.meta.insert("material".into(), Value::from("steel"));
        r.meta.insert("location_index".into(), Value::from(3u64));
        r
    }

    #[test]
    fn key_order_is_fixed() {
        let line = serde_json::to_string(&row("a")).unwrap();
        let keys = ["id", "path", "label", "class_name", "source", "split", "weight", "meta"];
        let positions: Vec<usize> = keys.iter().map(|k| line.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{line}");
    }

    #[test]
    fn strict_rejects_unknown_keys_lax_keeps_them() {
        let mut text = serde_json::to_string(&row("a")).unwrap();
        text.pop();
        text.push_str(",\"note\":\"x\"}\n");
        let err = Manifest::parse(&text, ParseMode::Strict, "m.jsonl").unwrap_err();
        assert!(matches!(err, Error::Schema { line: 1, .. }), "{err}");
        let lax = Manifest::parse(&text, ParseMode::Lax, "m.jsonl").unwrap();
        assert_eq!(lax.rows[0].extra["note"], Value::from("x"));
        assert_eq!(lax.to_jsonl(), text);
    }

    #[test]
    fn rejects_bad_rows() {
        let mut dup = Manifest {
            rows: vec![row("a"), row("a")],
        }
        .to_jsonl();
        assert!(Manifest::parse(&dup, ParseMode::Strict, "m").is_err());
        dup = Manifest {
            rows: vec![SampleRecord {
                weight: 0.0,
                ..row("a")
            }],
        }
        .to_jsonl();
        assert!(Manifest::parse(&dup, ParseMode::Strict, "m").is_err());
        let mut real = row("r");
        real.source = Source::Real;
        let text = Manifest { rows: vec![real] }.to_jsonl();
        assert!(Manifest::parse(&text, ParseMode::Strict, "m").is_err());
        assert!(Manifest::parse("{not json}\n", ParseMode::Lax, "m").is_err());
    }

    #[test]
    fn atomic_write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/m.jsonl");
        let m = Manifest::new(vec![row("a"), row("b")]).unwrap();
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p, ParseMode::Strict).unwrap(), m);
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn jsonl_round_trips(ids in prop::collection::btree_set("[a-z0-9_]{1,12}", 0..20),
                             weight in 0.001f64..100.0, label in 0u8..2) {
            let rows = ids.iter().map(|id| {
                let mut r = row(id);
                r.weight = weight;
                r.label = label;
                r
            }).collect();
            let m = Manifest::new(rows).unwrap();
            let back = Manifest::parse(&m.to_jsonl(), ParseMode::Strict, "m").unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
