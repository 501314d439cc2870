//! Edge-list loading and canonical serialization.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, SignedTrustGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFormat {
    /// `src,dst,weight` with weights already in [-1, 1].
    CsvTriplet,
    /// `SOURCE,TARGET,RATING,TIME` as in the SNAP bitcoin trust dumps;
    /// the rating is divided by `normalize_divisor` (default 10) and the
    /// timestamp is ignored.
    SnapRating,
}

impl EdgeFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "csv" | "csv_triplet" => Ok(EdgeFormat::CsvTriplet),
            "snap" | "snap_rating" => Ok(EdgeFormat::SnapRating),
            other => Err(Error::Usage(format!("unknown edge format {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeFormat::CsvTriplet => "csv_triplet",
            EdgeFormat::SnapRating => "snap_rating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfLoopPolicy {
    /// Skip the line and count it (default).
    Drop,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuplicatePolicy {
    /// A repeated (src, dst) pair overwrites the earlier weight (default).
    KeepLast,
    Reject,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: EdgeFormat,
    /// Divisor applied to raw weights. `None` means the format default:
    /// no scaling for csv_triplet, 10 for snap_rating.
    pub normalize_divisor: Option<f64>,
    pub self_loops: SelfLoopPolicy,
    pub duplicates: DuplicatePolicy,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: EdgeFormat::CsvTriplet,
            normalize_divisor: None,
            self_loops: SelfLoopPolicy::Drop,
            duplicates: DuplicatePolicy::KeepLast,
        }
    }
}

impl LoadOptions {
    pub fn snap() -> Self {
        LoadOptions {
            format: EdgeFormat::SnapRating,
            ..LoadOptions::default()
        }
    }

    fn divisor(&self) -> f64 {
        self.normalize_divisor.unwrap_or(match self.format {
            EdgeFormat::CsvTriplet => 1.0,
            EdgeFormat::SnapRating => 10.0,
        })
    }
}

pub fn load_edge_list(path: &Path, opts: &LoadOptions) -> Result<SignedTrustGraph> {
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), opts)
}

/// Parse an edge list. Node ids may be arbitrary strings; they are mapped
/// to contiguous indices in order of first appearance and kept as
/// `original_id`s. Lines that are blank or start with `#` are skipped, as
/// is an optional header line whose weight column is not a number.
pub fn parse_edge_list<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<SignedTrustGraph> {
    let divisor = opts.divisor();
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(Error::Usage(format!("normalize divisor must be positive, got {divisor}")));
    }
    let want_fields = match opts.format {
        EdgeFormat::CsvTriplet => 3,
        EdgeFormat::SnapRating => 4,
    };

    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let intern = |id: &str, ids: &mut Vec<String>, map: &mut HashMap<String, usize>| {
        if let Some(&i) = map.get(id) {
            return i;
        }
        let i = ids.len();
        ids.push(id.to_string());
        map.insert(id.to_string(), i);
        i
    };

    // (src, dst) -> (weight, arrival rank), so keep-last is a plain overwrite.
    let mut edge_map: HashMap<(usize, usize), f64> = HashMap::new();
    let mut dropped_self_loops = 0usize;
    let mut merged_duplicates = 0usize;
    let mut saw_data_line = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != want_fields {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {want_fields} comma-separated fields, got {}", fields.len()),
            });
        }
        let raw: f64 = match fields[2].parse() {
            Ok(v) => v,
            Err(_) if !saw_data_line => continue, // header line
            Err(_) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("weight {:?} is not a number", fields[2]),
                })
            }
        };
        saw_data_line = true;

        if fields[0] == fields[1] {
            match opts.self_loops {
                SelfLoopPolicy::Drop => {
                    dropped_self_loops += 1;
                    continue;
                }
                SelfLoopPolicy::Reject => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("self-loop at node {:?}", fields[0]),
                    })
                }
            }
        }

        let weight = raw / divisor;
        if !weight.is_finite() || weight == 0.0 || weight.abs() > 1.0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("weight {raw} (normalized {weight}) outside [-1, 1] \\ {{0}}"),
            });
        }

        let src = intern(fields[0], &mut ids, &mut id_index);
        let dst = intern(fields[1], &mut ids, &mut id_index);
        if edge_map.insert((src, dst), weight).is_some() {
            match opts.duplicates {
                DuplicatePolicy::KeepLast => merged_duplicates += 1,
                DuplicatePolicy::Reject => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("duplicate edge {:?} -> {:?}", fields[0], fields[1]),
                    })
                }
            }
        }
    }

    if ids.is_empty() {
        return Err(Error::Validation("edge list contains no edges".into()));
    }

    let edges = edge_map
        .into_iter()
        .map(|((src, dst), weight)| Edge { src, dst, weight })
        .collect();
    SignedTrustGraph::with_ids(ids.len(), edges, ids, dropped_self_loops, merged_duplicates)
}

impl SignedTrustGraph {
    /// Canonical csv_triplet form: header plus one line per edge, sorted by
    /// (src, dst) index, written with original ids. Nodes without any edge
    /// do not appear; opinion files are what carries the full node set.
    pub fn to_csv_triplet(&self) -> String {
        let mut out = String::from("src,dst,weight\n");
        for e in self.edges() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.original_id(e.src),
                self.original_id(e.dst),
                e.weight
            ));
        }
        out
    }

    pub fn write_csv_triplet(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(self.to_csv_triplet().as_bytes())?;
        Ok(())
    }
}
