//! Naive recursive tree builder that replays a recorded choice trace.
//!
//! Shares nothing with the library's builder except the trace format and the
//! `Node` type used for the final comparison.

use std::collections::VecDeque;

use nowcast::extratrees::{Node, TraceEvent};

#[derive(Debug)]
enum RefNode {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RefNode>,
        right: Box<RefNode>,
    },
}

/// Row-major fixture.
pub struct Fixture {
    pub name: String,
    pub rows: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

impl Fixture {
    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features())
            .map(|f| self.rows.iter().map(|r| r[f]).collect())
            .collect()
    }
}

fn avg(values: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in values {
        s += v;
    }
    s / values.len() as f64
}

fn pop_var(values: &[f64]) -> f64 {
    let m = avg(values);
    let mut s = 0.0;
    for v in values {
        s += (v - m) * (v - m);
    }
    s / values.len() as f64
}

struct Replay<'a> {
    fx: &'a Fixture,
    k: usize,
    n_min: usize,
    trace: VecDeque<TraceEvent>,
}

impl Replay<'_> {
    fn build(&mut self, idx: Vec<usize>) -> Result<RefNode, String> {
        let ys: Vec<f64> = idx.iter().map(|&i| self.fx.target[i]).collect();
        let leaf = RefNode::Leaf {
            value: avg(&ys),
            count: ys.len(),
        };
        if idx.len() < self.n_min {
            return Ok(leaf);
        }
        if ys.iter().all(|&y| y == ys[0]) {
            return Ok(leaf);
        }
        let mut usable = Vec::new();
        for f in 0..self.fx.n_features() {
            let first = self.fx.rows[idx[0]][f];
            if idx.iter().any(|&i| self.fx.rows[i][f] != first) {
                usable.push(f);
            }
        }
        if usable.is_empty() {
            return Ok(leaf);
        }

        let chosen = match self.trace.pop_front() {
            Some(TraceEvent::Features(fs)) => fs,
            other => return Err(format!("expected a feature draw, trace had {other:?}")),
        };
        if chosen.len() != self.k.min(usable.len()) {
            return Err(format!(
                "drew {} features, expected {}",
                chosen.len(),
                self.k.min(usable.len())
            ));
        }
        for (a, f) in chosen.iter().enumerate() {
            if !usable.contains(f) || chosen[..a].contains(f) {
                return Err(format!("feature {f} is not a fresh non-constant candidate"));
            }
        }

        let parent = pop_var(&ys);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &chosen {
            let t = match self.trace.pop_front() {
                Some(TraceEvent::Threshold { feature, value }) if feature == f => value,
                other => return Err(format!("expected a threshold for {f}, trace had {other:?}")),
            };
            let col: Vec<f64> = idx.iter().map(|&i| self.fx.rows[i][f]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(t > lo && t < hi) {
                return Err(format!("threshold {t} not strictly inside ({lo}, {hi})"));
            }
            let l: Vec<f64> = idx
                .iter()
                .filter(|&&i| self.fx.rows[i][f] < t)
                .map(|&i| self.fx.target[i])
                .collect();
            let r: Vec<f64> = idx
                .iter()
                .filter(|&&i| self.fx.rows[i][f] >= t)
                .map(|&i| self.fx.target[i])
                .collect();
            let n = ys.len() as f64;
            let score = parent - (l.len() as f64 * pop_var(&l) + r.len() as f64 * pop_var(&r)) / n;
            match best {
                Some((s, _, _)) if score <= s => {}
                _ => best = Some((score, f, t)),
            }
        }
        let (_, feature, threshold) = best.ok_or("no candidate")?;
        let left_idx: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| self.fx.rows[i][feature] < threshold)
            .collect();
        let right_idx: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| self.fx.rows[i][feature] >= threshold)
            .collect();
        let left = self.build(left_idx)?;
        let right = self.build(right_idx)?;
        Ok(RefNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        })
    }
}

fn flatten(node: &RefNode, out: &mut Vec<Node>) {
    match node {
        RefNode::Leaf { value, count } => out.push(Node::Leaf {
            value: *value,
            count: *count,
        }),
        RefNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let me = out.len();
            out.push(Node::Split {
                feature: *feature,
                threshold: *threshold,
                left: 0,
                right: 0,
            });
            let l = out.len();
            flatten(left, out);
            let r = out.len();
            flatten(right, out);
            out[me] = Node::Split {
                feature: *feature,
                threshold: *threshold,
                left: l,
                right: r,
            };
        }
    }
}

/// Rebuilds the tree from `trace`, returning it in pre-order. Fails if the
/// trace does not line up with the reference's own stopping decisions or if
/// any event is left over.
pub fn replay(
    fx: &Fixture,
    k: usize,
    n_min: usize,
    trace: Vec<TraceEvent>,
) -> Result<Vec<Node>, String> {
    let mut r = Replay {
        fx,
        k,
        n_min,
        trace: trace.into(),
    };
    let root = r.build((0..fx.target.len()).collect())?;
    if !r.trace.is_empty() {
        return Err(format!("{} unused trace events", r.trace.len()));
    }
    let mut out = Vec::new();
    flatten(&root, &mut out);
    Ok(out)
}

/// Deterministic fixture set: every size 2..=8 rows with 1 or 2 features,
/// in several value patterns (distinct, tied, constant column, duplicates).
pub fn fixtures() -> Vec<Fixture> {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 1000) as f64 / 10.0 - 50.0
    };
    let mut out = Vec::new();
    for n in 2..=8usize {
        for p in 1..=2usize {
            for pattern in 0..4 {
                let mut rows: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..p).map(|_| next()).collect()).collect();
                let mut target: Vec<f64> = (0..n).map(|_| next()).collect();
                match pattern {
                    1 => rows
                        .iter_mut()
                        .for_each(|r| r.iter_mut().for_each(|v| *v = v.round() % 3.0)),
                    2 => rows.iter_mut().for_each(|r| r[0] = 7.0),
                    3 => {
                        if n > 2 {
                            rows[1] = rows[0].clone();
                            target[1] = target[0] + 1.0;
                        }
                        target.iter_mut().for_each(|v| *v = v.round());
                    }
                    _ => {}
                }
                out.push(Fixture {
                    name: format!("n{n}_p{p}_pat{pattern}"),
                    rows,
                    target,
                });
            }
        }
    }
    out
}
