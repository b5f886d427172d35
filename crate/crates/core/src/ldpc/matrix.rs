use std::fmt::Write as _;

use crate::{Error, Result};

/// Binary sparse parity-check matrix `H_R` with Tanner-graph adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    untainted: Vec<u32>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from row adjacency lists and computes its untainted
    /// column set.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let cols = column_adjacency(n_cols, &rows)?;
        let mut h = ParityCheckMatrix {
            n_cols,
            rows,
            cols,
            untainted: Vec::new(),
        };
        h.untainted = select_untainted(&h);
        Ok(h)
    }

    /// Same as [`from_rows`](Self::from_rows) but with a precomputed untainted
    /// set, which is validated for pairwise check-disjointness.
    pub fn with_untainted(n_cols: usize, rows: Vec<Vec<u32>>, untainted: Vec<u32>) -> Result<Self> {
        let cols = column_adjacency(n_cols, &rows)?;
        let h = ParityCheckMatrix {
            n_cols,
            rows,
            cols,
            untainted,
        };
        let mut owner = vec![false; h.n_rows()];
        for &c in &h.untainted {
            let adj = h
                .cols
                .get(c as usize)
                .ok_or_else(|| Error::Config(format!("untainted column {c} out of range")))?;
            for &r in adj {
                if std::mem::replace(&mut owner[r as usize], true) {
                    return Err(Error::Config(format!(
                        "untainted set shares check {r} between columns"
                    )));
                }
            }
        }
        Ok(h)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Design rate `1 - n_rows / n_cols`.
    pub fn rate(&self) -> f64 {
        1.0 - self.n_rows() as f64 / self.n_cols as f64
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Untainted columns in greedy selection order.
    pub fn untainted_columns(&self) -> &[u32] {
        &self.untainted
    }

    /// `p_R`: the maximum number of punctured positions.
    pub fn max_punctured(&self) -> usize {
        self.untainted.len()
    }

    /// `H x mod 2`.
    pub fn syndrome(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.n_cols {
            return Err(Error::arg(format!(
                "syndrome input has {} bits, matrix has {} columns",
                x.len(),
                self.n_cols
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1)))
            .collect())
    }

    /// Length of the shortest cycle of the Tanner graph, `None` if acyclic.
    ///
    /// Exhaustive BFS from every column; only meant for small matrices.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n_cols;
        let m = self.n_rows();
        let mut best: Option<usize> = None;
        // Nodes: columns [0, n), rows [n, n + m).
        for start in 0..n {
            let mut dist = vec![usize::MAX; n + m];
            let mut parent = vec![usize::MAX; n + m];
            let mut queue = std::collections::VecDeque::new();
            dist[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                let neighbours: Vec<usize> = if u < n {
                    self.cols[u].iter().map(|&r| n + r as usize).collect()
                } else {
                    self.rows[u - n].iter().map(|&c| c as usize).collect()
                };
                for w in neighbours {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let cycle = dist[u] + dist[w] + 1;
                        best = Some(best.map_or(cycle, |b| b.min(cycle)));
                    }
                }
            }
        }
        best
    }

    /// Serialises to the versioned text cache format.
    pub fn to_text(&self, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qrir-pcm 1");
        let _ = writeln!(out, "n_cols {}", self.n_cols);
        let _ = writeln!(out, "n_rows {}", self.n_rows());
        let _ = writeln!(out, "seed {seed}");
        for row in &self.rows {
            let _ = write!(out, "{}", row.len());
            for c in row {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        let _ = write!(out, "untainted {}", self.untainted.len());
        for c in &self.untainted {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        out
    }

    /// Parses the text cache format. Returns the matrix and its stored seed.
    pub fn from_text(text: &str) -> Result<(Self, u64)> {
        let bad = |msg: &str| Error::Config(format!("matrix file: {msg}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("qrir-pcm 1") {
            return Err(bad("unsupported header"));
        }
        let mut field = |name: &str| -> Result<u64> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let value = line
                .strip_prefix(name)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(&format!("expected `{name}`")))?;
            Ok(value)
        };
        let n_cols = field("n_cols")? as usize;
        let n_rows = field("n_rows")? as usize;
        let seed = field("seed")?;
        let mut rows = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            let line = lines.next().ok_or_else(|| bad("truncated rows"))?;
            let nums = parse_u32s(line).ok_or_else(|| bad("bad row"))?;
            let (deg, entries) = nums.split_first().ok_or_else(|| bad("empty row"))?;
            if *deg as usize != entries.len() {
                return Err(bad("row degree mismatch"));
            }
            rows.push(entries.to_vec());
        }
        let line = lines.next().ok_or_else(|| bad("missing untainted set"))?;
        let rest = line
            .strip_prefix("untainted")
            .ok_or_else(|| bad("expected `untainted`"))?;
        let nums = parse_u32s(rest).ok_or_else(|| bad("bad untainted set"))?;
        let (count, untainted) = nums.split_first().ok_or_else(|| bad("bad untainted set"))?;
        if *count as usize != untainted.len() {
            return Err(bad("untainted count mismatch"));
        }
        Ok((Self::with_untainted(n_cols, rows, untainted.to_vec())?, seed))
    }
}

fn parse_u32s(line: &str) -> Option<Vec<u32>> {
    line.split_whitespace().map(|t| t.parse().ok()).collect()
}

fn column_adjacency(n_cols: usize, rows: &[Vec<u32>]) -> Result<Vec<Vec<u32>>> {
    let mut cols = vec![Vec::new(); n_cols];
    for (r, row) in rows.iter().enumerate() {
        for (i, &c) in row.iter().enumerate() {
            if c as usize >= n_cols {
                return Err(Error::arg(format!("row {r}: column {c} out of range")));
            }
            if i > 0 && row[i - 1] >= c {
                return Err(Error::arg(format!(
                    "row {r}: adjacency not strictly increasing"
                )));
            }
            cols[c as usize].push(r as u32);
        }
    }
    Ok(cols)
}

/// Greedy untainted puncturing set: columns are visited by ascending degree,
/// then index, and a column is taken when none of its check nodes already
/// touches a selected column.
pub fn select_untainted(h: &ParityCheckMatrix) -> Vec<u32> {
    let mut order: Vec<u32> = (0..h.n_cols as u32)
        .filter(|&c| !h.cols[c as usize].is_empty())
        .collect();
    order.sort_by_key(|&c| (h.cols[c as usize].len(), c));
    let mut taken = vec![false; h.n_rows()];
    let mut selected = Vec::new();
    for c in order {
        let adj = &h.cols[c as usize];
        if adj.iter().all(|&r| !taken[r as usize]) {
            for &r in adj {
                taken[r as usize] = true;
            }
            selected.push(c);
        }
    }
    selected
}
