//! Rigorous positivity of a residual over a frame or sphere product.
//!
//! The manifold is covered by boxes in hyperspherical (Givens) angles.
//! Every manifold vector moves by at most the sum of the half-widths of
//! the angles that feed it, which bounds every form value, then every term,
//! then every equation. Boxes whose lower bound clears the margin are
//! discarded; the rest are bisected.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::problem::{Layout, SearchConfig, SearchProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The residual is at least `lower_bound` everywhere on the manifold.
    Positive { lower_bound: f64, cells: u64 },
    /// A box center already has residual below the witness tolerance.
    NearZero { value: f64, point: Vec<Vec<f64>> },
    /// The evaluation budget ran out before every box cleared the margin.
    Exhausted { cells: u64, best_value: f64 },
}

#[derive(Debug, Clone)]
struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
    signs: Vec<f64>,
}

/// Angles of one rotated vector and the coordinates they act on.
#[derive(Debug, Clone)]
struct Block {
    first_coord: usize,
    angles: std::ops::Range<usize>,
    /// The vector's sign never matters (a complement normal).
    sign_free: bool,
}

/// How a manifold factor is built: `e_start` pushed through the rotations
/// of `feeding`, innermost last.
#[derive(Debug, Clone)]
struct Output {
    start: usize,
    feeding: Vec<usize>,
    /// Block whose angles this factor owns, if any.
    own: Option<usize>,
}

struct Param {
    ambient: usize,
    blocks: Vec<Block>,
    outputs: Vec<Output>,
    dim: usize,
}

impl Param {
    fn new(problem: &SearchProblem) -> Result<Param> {
        let m = problem.manifold();
        let d = m.ambient();
        let p = m.factors();
        let layout = m.layout();
        if layout == Layout::Other {
            return Err(Error::InvalidSystem {
                n: d,
                m: p,
                r: problem.jet().order(),
                reason: "certification needs a frame or a product of spheres".into(),
            });
        }
        let mut blocks = Vec::new();
        let mut next = 0;
        let mut push = |first: usize, sign_free: bool| {
            let count = d - first - 1;
            blocks.push(Block {
                first_coord: first,
                angles: next..next + count,
                sign_free,
            });
            next += count;
        };
        let outputs = if layout == Layout::Product {
            (0..p)
                .map(|i| {
                    push(0, false);
                    Output {
                        start: 0,
                        feeding: vec![i],
                        own: Some(i),
                    }
                })
                .collect()
        } else {
            let t = problem.span_tail();
            let head = p - t;
            // the tail's span is the complement of the head and d − p normals
            let tail_angles: usize = (head..p).map(|i| d - i - 1).sum();
            let normal_angles: usize = (head..head + d - p).map(|i| d - i - 1).sum();
            if t >= 2 && normal_angles < tail_angles {
                for i in 0..head + d - p {
                    push(i, i >= head);
                }
                let all: Vec<usize> = (0..head + d - p).collect();
                (0..p)
                    .map(|i| {
                        if i < head {
                            Output {
                                start: i,
                                feeding: (0..=i).collect(),
                                own: Some(i),
                            }
                        } else {
                            Output {
                                start: i + d - p,
                                feeding: all.clone(),
                                own: None,
                            }
                        }
                    })
                    .collect()
            } else {
                (0..p)
                    .map(|i| {
                        push(i, false);
                        Output {
                            start: i,
                            feeding: (0..=i).collect(),
                            own: Some(i),
                        }
                    })
                    .collect()
            }
        };
        Ok(Param {
            ambient: d,
            blocks,
            outputs,
            dim: next,
        })
    }

    /// Applies the rotation of `block` to `x` in place: Givens rotations on
    /// consecutive coordinate planes, first plane first, so that `e_a` maps
    /// to the hyperspherical point of the block's angles. With `diff`, the
    /// factor of that angle is replaced by its derivative.
    fn rotate(&self, block: &Block, angles: &[f64], x: &mut [f64], diff: Option<usize>) {
        let mut p = block.first_coord;
        for j in block.angles.clone() {
            let (s, c) = angles[j].sin_cos();
            let (a, b) = (x[p], x[p + 1]);
            if diff == Some(j) {
                // the derivative of a plane rotation vanishes off its plane
                x.iter_mut().for_each(|v| *v = 0.0);
                x[p] = -s * a - c * b;
                x[p + 1] = c * a - s * b;
            } else {
                x[p] = c * a - s * b;
                x[p + 1] = s * a + c * b;
            }
            p += 1;
        }
    }

    fn build(&self, out: &Output, sign: f64, angles: &[f64], diff: Option<usize>) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient];
        x[out.start] = sign;
        for &l in out.feeding.iter().rev() {
            self.rotate(&self.blocks[l], angles, &mut x, diff);
        }
        x
    }

    fn point(&self, angles: &[f64], signs: &[f64]) -> Vec<Vec<f64>> {
        self.outputs
            .iter()
            .zip(signs)
            .map(|(o, &s)| self.build(o, s, angles, None))
            .collect()
    }

    /// The point and, for every angle `j`, the derivatives `∂X_i/∂φ_j`.
    fn point_with_tangents(
        &self,
        angles: &[f64],
        signs: &[f64],
    ) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let point = self.point(angles, signs);
        let d = self.ambient;
        let mut tangents = vec![vec![vec![0.0; d]; self.outputs.len()]; self.dim];
        for (i, o) in self.outputs.iter().enumerate() {
            for &l in &o.feeding {
                for j in self.blocks[l].angles.clone() {
                    tangents[j][i] = self.build(o, signs[i], angles, Some(j));
                }
            }
        }
        (point, tangents)
    }

    /// Upper bound on how far each factor vector moves within the box.
    fn deviations(&self, half: &[f64]) -> Vec<f64> {
        let sums: Vec<f64> = self
            .blocks
            .iter()
            .map(|b| half[b.angles.clone()].iter().sum())
            .collect();
        self.outputs
            .iter()
            .map(|o| o.feeding.iter().map(|&l| sums[l]).sum())
            .collect()
    }

    fn roots(&self, cfg: &SearchConfig, symmetric: bool) -> Vec<Cell> {
        let cells = cfg.grid_cells.max(1);
        let mut ranges: Vec<(f64, usize)> = vec![(0.0, 0); self.dim];
        for b in &self.blocks {
            let count = b.angles.len();
            for (off, j) in b.angles.clone().enumerate() {
                ranges[j] = if off + 1 < count || symmetric || b.sign_free {
                    (PI, cells)
                } else {
                    (2.0 * PI, 2 * cells)
                };
            }
        }
        let sign_choices: Vec<Vec<f64>> = self
            .outputs
            .iter()
            .map(|o| match o.own {
                Some(l) if self.blocks[l].angles.is_empty() && !symmetric => vec![1.0, -1.0],
                _ => vec![1.0],
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.dim];
        let mut sidx = vec![0usize; self.outputs.len()];
        loop {
            let mut center = Vec::with_capacity(self.dim);
            let mut half = Vec::with_capacity(self.dim);
            for (j, &(len, k)) in ranges.iter().enumerate() {
                let w = len / k as f64;
                center.push((idx[j] as f64 + 0.5) * w);
                half.push(w / 2.0);
            }
            let signs = sidx
                .iter()
                .zip(&sign_choices)
                .map(|(&s, c)| c[s])
                .collect();
            out.push(Cell {
                center,
                half,
                signs,
            });
            if !odometer(&mut idx, |j| ranges[j].1) && !odometer(&mut sidx, |i| sign_choices[i].len())
            {
                break;
            }
        }
        out
    }
}

/// Advances a mixed-radix counter; returns false when it wraps to zero.
fn odometer(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < radix(j) {
            return true;
        }
        idx[j] = 0;
    }
    false
}

enum CellResult {
    Pruned(f64),
    Witness(f64, Vec<Vec<f64>>),
    Split(f64, Box<(Cell, Cell)>),
}

/// Per-atom bounds valid on a whole box.
struct AtomBounds {
    /// `|A|` anywhere in the box.
    size: Vec<f64>,
    /// `|dA/dt|` along the straight angle path from the center.
    slope: Vec<f64>,
    /// `|d²A/dt²|` along the same path.
    curve: Vec<f64>,
}

fn atom_bounds(problem: &SearchProblem, atoms: &[f64], dev: &[f64]) -> AtomBounds {
    let mut out = AtomBounds {
        size: Vec::with_capacity(atoms.len()),
        slope: Vec::with_capacity(atoms.len()),
        curve: Vec::with_capacity(atoms.len()),
    };
    for (a, &value) in problem.atoms.iter().zip(atoms) {
        // variable slots stay unit length, fixed ones never move
        let mut fixed_norms = 1.0;
        let mut moving = 0.0;
        for &sl in &a.slots {
            match problem.fixed_norm(sl) {
                Some(n) => fixed_norms *= n,
                None => moving += dev[sl],
            }
        }
        let cap = problem.form_bound(a.order) * fixed_norms;
        let slope = cap * moving;
        out.size.push((value.abs() + slope).min(cap.max(value.abs())));
        out.slope.push(slope);
        out.curve.push(cap * moving * moving);
    }
    out
}

/// Zeroth- and second-order deviation bounds of every equation over the box.
///
/// The zeroth-order bound telescopes each product over atom deviations.
/// The second-order one bounds `|e(φ) − e(φc) − ∇e(φc)·Δ|` by half the
/// largest second derivative along the path `φc + tΔ`.
fn equation_deviations(problem: &SearchProblem, atoms: &[f64], ab: &AtomBounds) -> (Vec<f64>, Vec<f64>) {
    let mut zeroth = Vec::with_capacity(problem.compiled.len());
    let mut second = Vec::with_capacity(problem.compiled.len());
    let mut factors: Vec<usize> = Vec::new();
    for terms in &problem.compiled {
        let mut z = 0.0;
        let mut s2 = 0.0;
        for t in terms {
            factors.clear();
            for &(a, p) in &t.factors {
                factors.extend(std::iter::repeat_n(a, p as usize));
            }
            let c = t.coeff.abs();
            // telescoping: |Πa − Πb| ≤ Σ_i |a_i − b_i| Π_{k<i} |a_k| Π_{k>i} |b_k|
            let mut tel = 0.0;
            for (i, &f) in factors.iter().enumerate() {
                let shift = ab.slope[f].min(ab.size[f] + atoms[f].abs());
                let before: f64 = factors[..i].iter().map(|&g| ab.size[g]).product();
                let after: f64 = factors[i + 1..].iter().map(|&g| atoms[g].abs()).product();
                tel += shift * before * after;
            }
            z += c * tel;
            // product rule: Σ f'' Π others + Σ_{f≠g} f' g' Π others
            let mut d2 = 0.0;
            for (i, &f) in factors.iter().enumerate() {
                let rest: f64 = factors
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, &g)| ab.size[g])
                    .product();
                d2 += ab.curve[f] * rest;
                for (j, &g) in factors.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let rest: f64 = factors
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != i && k != j)
                        .map(|(_, &h)| ab.size[h])
                        .product();
                    d2 += ab.slope[f] * ab.slope[g] * rest;
                }
            }
            s2 += c * d2;
        }
        zeroth.push(z);
        second.push(0.5 * s2);
    }
    (zeroth, second)
}

struct Bound {
    lb: f64,
    /// Per-angle weight of the first-order deviation, used to pick splits.
    weights: Vec<f64>,
}

fn cell_bound(
    problem: &SearchProblem,
    param: &Param,
    cell: &Cell,
    values: &[f64],
    atoms: &[f64],
    jac_angles: &[Vec<f64>],
) -> Bound {
    let dev = param.deviations(&cell.half);
    let ab = atom_bounds(problem, atoms, &dev);
    let (zeroth, second) = equation_deviations(problem, atoms, &ab);
    let mut lb_each = 0.0;
    let mut weights = vec![0.0; param.dim];
    for (e, &v) in values.iter().enumerate() {
        let first: f64 = jac_angles[e]
            .iter()
            .zip(&cell.half)
            .map(|(g, h)| g.abs() * h)
            .sum();
        let de = zeroth[e].min(first + second[e]);
        let gap = (v.abs() - de).max(0.0);
        lb_each += gap * gap;
        for (w, g) in weights.iter_mut().zip(&jac_angles[e]) {
            *w += g.abs();
        }
    }
    // joint bound: ‖e‖ ≥ y·e for the unit direction y of e at the center
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut lb_joint = 0.0;
    if norm > 0.0 {
        let y: Vec<f64> = values.iter().map(|v| v / norm).collect();
        let mut first = 0.0;
        for (j, h) in cell.half.iter().enumerate() {
            let g: f64 = y.iter().zip(jac_angles).map(|(yi, row)| yi * row[j]).sum();
            first += g.abs() * h;
        }
        let rem: f64 = y.iter().zip(&second).map(|(yi, s)| yi.abs() * s).sum();
        let rough: f64 = y.iter().zip(&zeroth).map(|(yi, z)| yi.abs() * z).sum();
        let gap = (norm - rough.min(first + rem)).max(0.0);
        lb_joint = gap * gap;
    }
    // second-order share grows with the width of every angle
    let rem_total: f64 = second.iter().sum();
    let width: f64 = cell.half.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    for (w, h) in weights.iter_mut().zip(&cell.half) {
        *w = h * (*w + rem_total / width);
    }
    Bound {
        lb: lb_each.max(lb_joint),
        weights,
    }
}

fn process(problem: &SearchProblem, param: &Param, cell: Cell, cfg: &SearchConfig) -> CellResult {
    let (point, tangents) = param.point_with_tangents(&cell.center, &cell.signs);
    let ev = problem.evaluate(&point, true);
    let value: f64 = ev.values.iter().map(|v| v * v).sum();
    if value < cfg.witness_tol {
        return CellResult::Witness(value, point);
    }
    let d = param.ambient;
    let jac = ev.jac.as_ref().expect("requested");
    let jac_angles: Vec<Vec<f64>> = jac
        .iter()
        .map(|row| {
            tangents
                .iter()
                .map(|tj| {
                    tj.iter()
                        .enumerate()
                        .map(|(i, ti)| {
                            row[i * d..(i + 1) * d]
                                .iter()
                                .zip(ti)
                                .map(|(a, b)| a * b)
                                .sum::<f64>()
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let b = cell_bound(problem, param, &cell, &ev.values, &ev.atoms, &jac_angles);
    if b.lb >= cfg.margin_tol {
        return CellResult::Pruned(b.lb);
    }
    // bisect the angle that contributes most to the deviation
    let j = b
        .weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, &w)| if w > acc.1 { (j, w) } else { acc })
        .0;
    let mut left = cell.clone();
    let mut right = cell;
    let w = left.half[j] / 2.0;
    left.half[j] = w;
    right.half[j] = w;
    left.center[j] -= w;
    right.center[j] += w;
    CellResult::Split(value, Box::new((left, right)))
}

/// Proves `residual ≥ margin_tol` over the whole manifold, or reports why not.
pub fn certify_positive(problem: &SearchProblem, cfg: &SearchConfig) -> Result<Certificate> {
    let param = Param::new(problem)?;
    if param.dim > cfg.dim_ceiling {
        return Err(Error::DimensionTooLarge {
            dim: param.dim,
            ceiling: cfg.dim_ceiling,
        });
    }
    let mut stack = param.roots(cfg, problem.sign_symmetric());
    stack.reverse();
    let mut cells: u64 = 0;
    let mut lower = f64::INFINITY;
    let mut best_value = f64::INFINITY;
    const BATCH: usize = 2048;
    while !stack.is_empty() {
        let take = stack.len().min(BATCH);
        let batch: Vec<Cell> = stack.split_off(stack.len() - take);
        cells += batch.len() as u64;
        let results: Vec<CellResult> = batch
            .into_par_iter()
            .map(|c| process(problem, &param, c, cfg))
            .collect();
        let mut children = Vec::new();
        for r in results {
            match r {
                CellResult::Pruned(lb) => lower = lower.min(lb),
                CellResult::Witness(value, point) => {
                    return Ok(Certificate::NearZero { value, point });
                }
                CellResult::Split(value, pair) => {
                    best_value = best_value.min(value);
                    let (a, b) = *pair;
                    children.push(a);
                    children.push(b);
                }
            }
        }
        if cells >= cfg.eval_budget {
            return Ok(Certificate::Exhausted { cells, best_value });
        }
        children.reverse();
        stack.extend(children);
    }
    Ok(Certificate::Positive {
        lower_bound: lower,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::Jet;
    use crate::search::Manifold;

    fn dummy(n: usize, p: usize, frame: bool) -> SearchProblem {
        let jet = Jet::from_coeffs(n, 1, vec![0.0; n], []).unwrap();
        let m = if frame {
            Manifold::frame(n, p)
        } else {
            Manifold::product(n, p)
        };
        SearchProblem::new(jet, m, vec![], vec![]).unwrap()
    }

    #[test]
    fn frame_parametrization_is_orthonormal() {
        let prob = dummy(5, 3, true);
        let param = Param::new(&prob).unwrap();
        assert_eq!(param.dim, 4 + 3 + 2);
        let angles: Vec<f64> = (0..param.dim).map(|i| 0.3 + 0.7 * i as f64).collect();
        let pt = param.point(&angles, &[1.0, 1.0, 1.0]);
        assert!(prob.manifold().constraint_violation(&pt) < 1e-14);
    }

    #[test]
    fn first_angle_moves_first_coordinate() {
        let prob = dummy(3, 1, false);
        let param = Param::new(&prob).unwrap();
        let pt = param.point(&[0.4, 1.1], &[1.0]);
        let v = &pt[0];
        assert!((v[0] - 0.4f64.cos()).abs() < 1e-15);
        assert!((v[1] - 0.4f64.sin() * 1.1f64.cos()).abs() < 1e-15);
        assert!((v[2] - 0.4f64.sin() * 1.1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn tangents_match_finite_differences() {
        let prob = dummy(4, 3, true);
        let param = Param::new(&prob).unwrap();
        let a: Vec<f64> = (0..param.dim).map(|i| 0.2 + 0.45 * i as f64).collect();
        let (_, t) = param.point_with_tangents(&a, &[1.0, 1.0, 1.0]);
        let h = 1e-6;
        for j in 0..param.dim {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[j] += h;
            am[j] -= h;
            let p = param.point(&ap, &[1.0, 1.0, 1.0]);
            let m = param.point(&am, &[1.0, 1.0, 1.0]);
            for i in 0..3 {
                for c in 0..4 {
                    let fd = (p[i][c] - m[i][c]) / (2.0 * h);
                    assert!((fd - t[j][i][c]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn span_tail_uses_complement_normals() {
        let prob = dummy(4, 3, true).with_span_invariant_tail(2);
        let param = Param::new(&prob).unwrap();
        assert_eq!(param.dim, 3 + 2);
        let a: Vec<f64> = (0..param.dim).map(|i| 0.3 + 0.6 * i as f64).collect();
        let pt = param.point(&a, &[1.0, 1.0, 1.0]);
        assert!(prob.manifold().constraint_violation(&pt) < 1e-14);
        let (_, t) = param.point_with_tangents(&a, &[1.0, 1.0, 1.0]);
        let h = 1e-6;
        for j in 0..param.dim {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[j] += h;
            am[j] -= h;
            let p = param.point(&ap, &[1.0, 1.0, 1.0]);
            let m = param.point(&am, &[1.0, 1.0, 1.0]);
            for i in 0..3 {
                for c in 0..4 {
                    let fd = (p[i][c] - m[i][c]) / (2.0 * h);
                    assert!((fd - t[j][i][c]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn movement_bound_holds() {
        let prob = dummy(4, 2, true);
        let param = Param::new(&prob).unwrap();
        let a: Vec<f64> = vec![0.5, 1.0, 2.0, 0.3, 4.0];
        let b: Vec<f64> = vec![0.52, 0.97, 2.01, 0.33, 3.98];
        let half: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
        let dev = param.deviations(&half);
        let pa = param.point(&a, &[1.0, 1.0]);
        let pb = param.point(&b, &[1.0, 1.0]);
        for i in 0..2 {
            let dist: f64 = pa[i]
                .iter()
                .zip(&pb[i])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= dev[i] + 1e-15);
        }
    }
}
