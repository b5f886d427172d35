use std::fmt::Write as _;

use crate::{Error, Result};

/// Node-perspective degree distributions of a Tanner graph.
///
/// Each entry is `(degree, fraction of nodes)`; fractions of each side sum
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pub variable_node_degrees: Vec<(usize, f64)>,
    pub check_node_degrees: Vec<(usize, f64)>,
}

impl DegreeDistribution {
    pub fn new(variable: Vec<(usize, f64)>, check: Vec<(usize, f64)>) -> Result<Self> {
        for (side, list) in [("variable", &variable), ("check", &check)] {
            if list.is_empty() {
                return Err(Error::arg(format!("{side} distribution is empty")));
            }
            if list.iter().any(|&(d, f)| d == 0 || !(0.0..=1.0).contains(&f)) {
                return Err(Error::arg(format!(
                    "{side} distribution has a zero degree or a fraction outside [0, 1]"
                )));
            }
            let total: f64 = list.iter().map(|&(_, f)| f).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::arg(format!(
                    "{side} fractions sum to {total}, expected 1"
                )));
            }
        }
        Ok(DegreeDistribution {
            variable_node_degrees: variable,
            check_node_degrees: check,
        })
    }

    /// Regular `(dv, dc)` distribution.
    pub fn regular(dv: usize, dc: usize) -> Result<Self> {
        Self::new(vec![(dv, 1.0)], vec![(dc, 1.0)])
    }

    /// Column-weight-3 distribution with check degrees concentrated on the two
    /// integers around `3 / (1 - rate)`. Used for rates without a shipped file.
    pub fn column_weight_three(rate: f64) -> Self {
        let mean = 3.0 / (1.0 - rate);
        let lo = mean.floor();
        let frac_hi = ((mean - lo) * 1e9).round() / 1e9;
        let check = if frac_hi == 0.0 {
            vec![(lo as usize, 1.0)]
        } else {
            vec![(lo as usize, 1.0 - frac_hi), (lo as usize + 1, frac_hi)]
        };
        DegreeDistribution {
            variable_node_degrees: vec![(3, 1.0)],
            check_node_degrees: check,
        }
    }

    /// Splits `n` nodes among the degrees of `list` by largest remainder.
    /// Returns the degree of every node in ascending order.
    pub(crate) fn node_degrees(list: &[(usize, f64)], n: usize) -> Vec<usize> {
        let mut counts: Vec<(usize, usize, f64)> = list
            .iter()
            .map(|&(d, f)| {
                let exact = f * n as f64;
                (d, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let assigned: usize = counts.iter().map(|c| c.1).sum();
        let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
        by_remainder.sort_by(|&a, &b| counts[b].2.total_cmp(&counts[a].2).then(a.cmp(&b)));
        for &i in by_remainder.iter().cycle().take(n.saturating_sub(assigned)) {
            counts[i].1 += 1;
        }
        let mut degrees: Vec<usize> = counts
            .iter()
            .flat_map(|&(d, k, _)| std::iter::repeat_n(d, k))
            .collect();
        degrees.sort_unstable();
        degrees
    }

    /// Parses the plain-text format: `[variable]` and `[check]` sections of
    /// `degree fraction` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut variable = Vec::new();
        let mut check = Vec::new();
        let mut section: Option<&mut Vec<(usize, f64)>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[variable]" => section = Some(&mut variable),
                "[check]" => section = Some(&mut check),
                _ => {
                    let bad = || Error::Config(format!("degree file line {}: `{raw}`", lineno + 1));
                    let mut parts = line.split_whitespace();
                    let degree = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                    let fraction = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                    if parts.next().is_some() {
                        return Err(bad());
                    }
                    section.as_mut().ok_or_else(bad)?.push((degree, fraction));
                }
            }
        }
        Self::new(variable, check)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[variable]\n");
        for (d, f) in &self.variable_node_degrees {
            let _ = writeln!(out, "{d} {f}");
        }
        out.push_str("[check]\n");
        for (d, f) in &self.check_node_degrees {
            let _ = writeln!(out, "{d} {f}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(DegreeDistribution::new(vec![(3, 0.5)], vec![(6, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(0, 1.0)], vec![(6, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(2, 0.4), (3, 0.6)], vec![(6, 1.0)]).is_ok());
    }

    #[test]
    fn column_weight_three_mean_degree() {
        for pct in (50..=90).step_by(5) {
            let rate = pct as f64 / 100.0;
            let d = DegreeDistribution::column_weight_three(rate);
            let mean: f64 = d.check_node_degrees.iter().map(|&(k, f)| k as f64 * f).sum();
            assert!((mean - 3.0 / (1.0 - rate)).abs() < 1e-6, "rate {rate}");
            DegreeDistribution::new(d.variable_node_degrees, d.check_node_degrees).unwrap();
        }
    }

    #[test]
    fn largest_remainder_rounding() {
        let degrees = DegreeDistribution::node_degrees(&[(2, 0.25), (3, 0.5), (8, 0.25)], 10);
        assert_eq!(degrees.len(), 10);
        assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 5);
    }

    #[test]
    fn text_roundtrip() {
        let d = DegreeDistribution::new(vec![(2, 0.25), (3, 0.75)], vec![(7, 1.0)]).unwrap();
        assert_eq!(DegreeDistribution::parse(&d.to_text()).unwrap(), d);
        let with_comments = "# rate 0.5\n[variable]\n3 1.0 # all three\n\n[check]\n6 1\n";
        assert_eq!(
            DegreeDistribution::parse(with_comments).unwrap(),
            DegreeDistribution::regular(3, 6).unwrap()
        );
        assert!(DegreeDistribution::parse("3 1.0\n").is_err());
    }
}
