//! File formats: edge lists, generator triplets, vector and sweep CSVs,
//! JSON summaries and binary event logs.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ctmc_trunc_core::limits::SweepReport;
use ctmc_trunc_core::{EdgeListNetwork, FiniteSubset, ProbVec, Scheme, SparseGenerator, StateLabel};
use serde::Serialize;

use crate::error::{CliError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

pub fn read_edge_list(path: &Path) -> Result<EdgeListNetwork> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("edge_list");
    parse_edge_list(&text, name, path)
}

/// Reads `src dst rate` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str, name: &str, path: &Path) -> Result<EdgeListNetwork> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(path, i + 1, "expected `src dst rate`"));
        }
        let label = |s: &str| {
            s.parse::<StateLabel>()
                .map_err(|e| parse_error(path, i + 1, e.to_string()))
        };
        let rate = fields[2]
            .parse::<f64>()
            .map_err(|_| parse_error(path, i + 1, format!("bad rate `{}`", fields[2])))?;
        edges.push((label(fields[0])?, label(fields[1])?, rate));
    }
    if edges.is_empty() {
        return Err(parse_error(path, 0, "no edges"));
    }
    EdgeListNetwork::new(name, edges).map_err(|e| parse_error(path, 0, e.to_string()))
}

/// Writes `# scheme=<name> n=<dim>`, one `# label <i> <label>` line per
/// window state, then `row col value` lines.
pub fn write_triplets<W: Write>(mut w: W, g: &SparseGenerator) -> Result<()> {
    writeln!(w, "# scheme={} n={}", g.scheme().name(), g.dim())?;
    writeln!(w, "# network {}", g.network_name())?;
    for (i, l) in g.subset().members().iter().enumerate() {
        writeln!(w, "# label {i} {l}")?;
    }
    for (i, j, v) in g.triplets() {
        writeln!(w, "{i} {j} {}", fmt17(v))?;
    }
    Ok(())
}

pub fn read_triplets(path: &Path) -> Result<SparseGenerator> {
    let text = fs::read_to_string(path)?;
    let mut scheme = None;
    let mut dim = None;
    let mut network = String::from("triplets");
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |m: &str| parse_error(path, i + 1, m);
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("label ") {
                let (_, label) = rest.split_once(' ').ok_or_else(|| err("bad label line"))?;
                labels.push(label.parse::<StateLabel>().map_err(|e| err(&e.to_string()))?);
            } else if let Some(rest) = comment.strip_prefix("network ") {
                network = rest.to_string();
            } else {
                for field in comment.split_whitespace() {
                    match field.split_once('=') {
                        Some(("scheme", s)) => scheme = Scheme::from_name(s),
                        Some(("n", n)) => dim = n.parse::<usize>().ok(),
                        _ => {}
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(err("expected `row col value`"));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| err("bad index"));
        let v = fields[2].parse::<f64>().map_err(|_| err("bad value"))?;
        triplets.push((idx(fields[0])?, idx(fields[1])?, v));
    }
    let scheme = scheme.ok_or_else(|| parse_error(path, 1, "missing `# scheme=` header"))?;
    let subset = FiniteSubset::new(labels)?;
    let g = SparseGenerator::from_triplets(subset, scheme, network, triplets)?;
    if dim != Some(g.dim()) {
        return Err(parse_error(path, 1, "header dimension does not match the labels"));
    }
    Ok(g)
}

fn vector_label(p: &ProbVec, i: usize) -> String {
    if i < p.subset().len() {
        p.subset().label(i).to_string()
    } else {
        "rest".into()
    }
}

/// `index,label,value` rows; a condensed remainder is labelled `rest`.
pub fn write_vector_csv(path: &Path, p: &ProbVec) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "label", "value"])?;
    for (i, &v) in p.values().iter().enumerate() {
        w.write_record([i.to_string(), vector_label(p, i), fmt17(v)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct LabelledValue {
    pub label: String,
    pub value: f64,
}

pub fn labelled(p: &ProbVec) -> Vec<LabelledValue> {
    p.values()
        .iter()
        .enumerate()
        .map(|(i, &value)| LabelledValue {
            label: vector_label(p, i),
            value,
        })
        .collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes a CSV with one header row and 17-digit floats.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// The three sweep CSVs; returns their paths.
pub fn write_sweep_csvs(dir: &Path, stem: &str, r: &SweepReport) -> Result<[PathBuf; 3]> {
    let time_header = |first: &[&str]| {
        first
            .iter()
            .map(|s| s.to_string())
            .chain(r.t_grid.iter().map(|t| format!("t={t}")))
            .collect::<Vec<_>>()
    };
    let pair_rows = |m: &[Vec<f64>]| {
        m.iter()
            .enumerate()
            .map(|(i, row)| {
                [r.sizes[i].to_string(), r.sizes[i + 1].to_string()]
                    .into_iter()
                    .chain(row.iter().map(|&x| fmt17(x)))
                    .collect()
            })
            .collect::<Vec<Vec<String>>>()
    };
    let evolve = dir.join(format!("{stem}_evolve.csv"));
    write_table(&evolve, &time_header(&["n", "n_next"]), &pair_rows(&r.evolve_diffs))?;
    let bound = dir.join(format!("{stem}_bound.csv"));
    write_table(&bound, &time_header(&["n", "n_next"]), &pair_rows(&r.groenwall_bounds))?;

    let stat = dir.join(format!("{stem}_stat.csv"));
    let header = [
        "n",
        "window_size",
        "op11",
        "spectral_gap",
        "stationary_source",
        "stationary_diff",
        "initial_diff",
        "generator_diff",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = (0..r.sizes.len())
        .map(|i| {
            let pair = |v: &[f64]| v.get(i).map(|&x| fmt17(x)).unwrap_or_default();
            vec![
                r.sizes[i].to_string(),
                r.window_sizes[i].to_string(),
                fmt17(r.op11[i]),
                r.spectral_gaps[i].map(fmt17).unwrap_or_default(),
                format!("{:?}", r.stationary_sources[i]),
                pair(&r.stationary_diffs),
                pair(&r.initial_diffs),
                pair(&r.generator_diffs),
            ]
        })
        .collect();
    write_table(&stat, &header, &rows)?;
    Ok([evolve, bound, stat])
}

/// Append-only little-endian `(u64 canonical state, f64 time)` records.
/// A record with time 0 opens each trajectory.
pub struct EventLog {
    w: BufWriter<File>,
    records: u64,
}

pub const EVENT_RECORD_BYTES: usize = 16;

impl EventLog {
    pub fn append(path: &Path) -> Result<EventLog> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog {
            w: BufWriter::new(f),
            records: 0,
        })
    }

    pub fn record(&mut self, state: &StateLabel, time: f64) -> Result<()> {
        self.w.write_all(&state.canonical().to_le_bytes())?;
        self.w.write_all(&time.to_le_bytes())?;
        self.records += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.w.flush()?;
        Ok(self.records)
    }
}

pub fn read_event_log(path: &Path) -> Result<Vec<(u64, f64)>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % EVENT_RECORD_BYTES != 0 {
        return Err(parse_error(path, 0, "truncated event record"));
    }
    Ok(bytes
        .chunks_exact(EVENT_RECORD_BYTES)
        .map(|c| {
            let s = u64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let t = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            (s, t)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctmc_trunc_core::presets::ThreeState;
    use ctmc_trunc_core::{truncate_condense, truncate_subnetwork, Network, WindowKind};

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 0.0] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn edge_lists_parse() {
        let p = Path::new("t.txt");
        let n = parse_edge_list("# header\n1 2 0.5\nz:1 z:2 1\n", "t", p);
        assert!(n.is_err(), "mixed kinds");
        let n = parse_edge_list("1 2 0.5 # tail\n\n2 1 2e0\n", "t", p).unwrap();
        assert_eq!(n.states().len(), 2);
        match parse_edge_list("1 2\n", "t", p) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(parse_edge_list("b:01 b:11 x\n", "t", p).is_err());
    }

    #[test]
    fn triplets_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = ThreeState::new(2.0, 3.0, 5.0, 7.0).unwrap();
        let f = FiniteSubset::nat_range(1, 2).unwrap();
        let h = net.window(WindowKind::Balls, 2).unwrap();
        for g in [truncate_subnetwork(&net, &f), truncate_condense(&net, &f, &h).unwrap()] {
            let path = dir.path().join("g.txt");
            write_triplets(File::create(&path).unwrap(), &g).unwrap();
            assert_eq!(read_triplets(&path).unwrap(), g);
        }
    }

    #[test]
    fn event_log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        for _ in 0..2 {
            let mut log = EventLog::append(&path).unwrap();
            log.record(&StateLabel::Int(-1), 0.0).unwrap();
            log.record(&StateLabel::Int(1), 0.25).unwrap();
            assert_eq!(log.finish().unwrap(), 2);
        }
        let events = read_event_log(&path).unwrap();
        assert_eq!(events, vec![(1, 0.0), (2, 0.25), (1, 0.0), (2, 0.25)]);
    }
}
