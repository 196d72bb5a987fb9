//! Text file formats: features, labels, node masks, weight tables and
//! diffusion datasets.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use tadropedge::synth::DiffusionSample;
use tadropedge::{EdgeWeightTable, Error, Graph};

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Error::Parse {
        line,
        msg: msg.into(),
    })
    .context(format!("reading {}", path.display()))
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (k, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((k + 1, t.to_string()));
    }
    Ok(out)
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    Graph::read_edge_list(open(path)?).with_context(|| format!("reading {}", path.display()))
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let mut w = create(path)?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Tab-separated rows of reals, row `i` describing node `i`.
pub fn read_features(path: &Path) -> Result<DMatrix<f64>> {
    let lines = data_lines(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
    for (line, text) in &lines {
        let row = text
            .split('\t')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_error(path, *line, format!("{v:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_error(
                    path,
                    *line,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// One nonnegative integer per line.
pub fn read_indices(path: &Path) -> Result<Vec<(usize, usize)>> {
    data_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            text.parse::<usize>()
                .map(|v| (line, v))
                .map_err(|e| parse_error(path, line, format!("{text:?}: {e}")))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    Ok(read_indices(path)?.into_iter().map(|(_, v)| v).collect())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Node ids listed one per line, each below `n`.
pub fn read_mask(path: &Path, n: usize) -> Result<Vec<usize>> {
    read_indices(path)?
        .into_iter()
        .map(|(line, v)| {
            if v >= n {
                Err(parse_error(
                    path,
                    line,
                    format!("unknown node id {v} (graph has {n} nodes)"),
                ))
            } else {
                Ok(v)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct DatasetPaths {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub train_mask: Option<PathBuf>,
    pub val_mask: Option<PathBuf>,
    pub test_mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Masks {
    pub train: Option<Vec<usize>>,
    pub val: Option<Vec<usize>>,
    pub test: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct NodeDataset {
    pub graph: Graph,
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub masks: Masks,
}

pub fn load_node_dataset(paths: &DatasetPaths) -> Result<NodeDataset> {
    let graph = read_graph(&paths.graph)?;
    let n = graph.node_count();
    let features = read_features(&paths.features)?;
    if features.nrows() != n {
        return Err(anyhow::Error::new(Error::LengthMismatch {
            expected: n,
            got: features.nrows(),
        })
        .context(format!(
            "{} has {} feature rows but the graph has {n} nodes",
            paths.features.display(),
            features.nrows()
        )));
    }
    let labels = read_labels(&paths.labels)?;
    if labels.len() != n {
        return Err(anyhow::Error::new(Error::LengthMismatch {
            expected: n,
            got: labels.len(),
        })
        .context(format!(
            "{} has {} labels but the graph has {n} nodes",
            paths.labels.display(),
            labels.len()
        )));
    }
    let mask = |p: &Option<PathBuf>| p.as_deref().map(|p| read_mask(p, n)).transpose();
    let masks = Masks {
        train: mask(&paths.train_mask)?,
        val: mask(&paths.val_mask)?,
        test: mask(&paths.test_mask)?,
    };
    Ok(NodeDataset {
        graph,
        features,
        labels,
        masks,
    })
}

/// `i<TAB>j<TAB>weight` per edge, in edge order.
pub fn write_weights(path: &Path, g: &Graph, table: &EdgeWeightTable) -> Result<()> {
    let mut w = create(path)?;
    for (&(i, j), wt) in g.edges().iter().zip(&table.weights) {
        writeln!(w, "{i}\t{j}\t{wt:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a weight file written by [`write_weights`] and checks that its
/// edges match `g` position by position.
pub fn read_weights(path: &Path, g: &Graph) -> Result<Vec<f64>> {
    let lines = data_lines(path)?;
    if lines.len() != g.edge_count() {
        return Err(anyhow::Error::new(Error::LengthMismatch {
            expected: g.edge_count(),
            got: lines.len(),
        })
        .context(format!(
            "{} lists {} edges, the graph has {}",
            path.display(),
            lines.len(),
            g.edge_count()
        )));
    }
    let mut out = Vec::with_capacity(lines.len());
    for ((line, text), &(i, j)) in lines.iter().zip(g.edges()) {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 3 {
            return Err(parse_error(path, *line, "expected i<TAB>j<TAB>weight"));
        }
        let a: usize = f[0]
            .parse()
            .map_err(|e| parse_error(path, *line, format!("{e}")))?;
        let b: usize = f[1]
            .parse()
            .map_err(|e| parse_error(path, *line, format!("{e}")))?;
        if (a.min(b), a.max(b)) != (i, j) {
            return Err(parse_error(
                path,
                *line,
                format!("edge ({a}, {b}) does not match graph edge ({i}, {j})"),
            ));
        }
        let w: f64 = f[2]
            .parse()
            .map_err(|e| parse_error(path, *line, format!("{e}")))?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(parse_error(path, *line, format!("invalid weight {w}")));
        }
        out.push(w);
    }
    Ok(out)
}

/// One row per sample: `N` signal values, then label, `t` and source.
pub fn write_dataset(path: &Path, samples: &[DiffusionSample]) -> Result<()> {
    let mut w = create(path)?;
    for s in samples {
        for v in &s.signal {
            write!(w, "{v:e}\t")?;
        }
        writeln!(w, "{}\t{}\t{}", s.label, s.t, s.source)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<DiffusionSample>> {
    let mut out = Vec::new();
    let mut width = None;
    for (line, text) in data_lines(path)? {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() < 4 {
            return Err(parse_error(
                path,
                line,
                "expected signal values followed by label, t and source",
            ));
        }
        if *width.get_or_insert(f.len()) != f.len() {
            return Err(parse_error(path, line, "rows have different lengths"));
        }
        let n = f.len() - 3;
        let signal = f[..n]
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| parse_error(path, line, format!("{e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|e| parse_error(path, line, format!("{e}")))
        };
        out.push(DiffusionSample {
            signal,
            label: int(f[n])?,
            t: int(f[n + 1])?,
            source: int(f[n + 2])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn toy_dataset_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name);
        fs::write(p("g.tsv"), "0\t1\n1\t2\n").unwrap();
        fs::write(p("x.tsv"), "1\t0\n0\t1\n0.5\t0.5\n").unwrap();
        fs::write(p("y.txt"), "0\n1\n1\n").unwrap();
        fs::write(p("train.txt"), "0\n2\n").unwrap();
        let paths = DatasetPaths {
            graph: p("g.tsv"),
            features: p("x.tsv"),
            labels: p("y.txt"),
            train_mask: Some(p("train.txt")),
            ..DatasetPaths::default()
        };
        let d = load_node_dataset(&paths).unwrap();
        assert_eq!(d.graph.node_count(), 3);
        assert_eq!(d.features.shape(), (3, 2));
        assert_eq!(d.masks.train, Some(vec![0, 2]));

        fs::write(p("x.tsv"), "1\t0\n0\t1\n").unwrap();
        let err = format!("{:#}", load_node_dataset(&paths).unwrap_err());
        assert!(
            err.contains("2 feature rows") && err.contains("3 nodes"),
            "{err}"
        );

        fs::write(p("x.tsv"), "1\t0\n0\t1\n0\t0\n").unwrap();
        fs::write(p("train.txt"), "0\n7\n").unwrap();
        let err = format!("{:#}", load_node_dataset(&paths).unwrap_err());
        assert!(
            err.contains("line 2") && err.contains("unknown node id 7"),
            "{err}"
        );
    }

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let table = EdgeWeightTable {
            weights: vec![0.25, 1.5],
            q_per_component: vec![Some(2)],
            default_weight: 0.25,
            node_count: 3,
        };
        let path = dir.path().join("w.tsv");
        write_weights(&path, &g, &table).unwrap();
        assert_eq!(read_weights(&path, &g).unwrap(), vec![0.25, 1.5]);
        let other = Graph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        assert!(read_weights(&path, &other).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![
            DiffusionSample {
                signal: vec![0.1, -0.2, 1.0 / 3.0],
                label: 1,
                t: 4,
                source: 2,
            },
            DiffusionSample {
                signal: vec![0.0, 0.5, 0.25],
                label: 0,
                t: 1,
                source: 0,
            },
        ];
        let path = dir.path().join("d.tsv");
        write_dataset(&path, &samples).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), samples);
    }
}
