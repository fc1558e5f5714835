//! Exact Wasserstein-1 and Wasserstein-2 distances.
//!
//! 1D instances use quantile/CDF couplings (on the circle: the shifted-CDF
//! median construction for W1 and a convex shift search on the universal
//! cover for W2). 2D atomic instances go through the exact network simplex
//! with the domain's minimal-image ground metric.

use thiserror::Error;

use super::domain::Axis;
use super::measure::Measure;
use super::network_simplex::{transport_cost, TransportError};

/// Per-measure atom cap for the dense exact solver.
pub const MAX_EXACT_OT_ATOMS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum WassersteinError {
    #[error("measures live on different domains")]
    DomainMismatch,
    #[error("instance too large for exact OT")]
    TooLarge,
    #[error("exact OT solver failed: {0:?}")]
    Solver(TransportError),
}

/// Support as weighted 1D points (grids are lowered to cell centers).
fn as_weighted_1d(mu: &Measure) -> (Vec<f64>, Vec<f64>) {
    let pts = mu.support_points();
    let w = mu.masses().to_vec();
    (pts.iter().map(|p| p[0]).collect(), w)
}

/// Sorted (position, weight) pairs with zero weights dropped.
fn sorted_atoms(xs: &[f64], ws: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = xs
        .iter()
        .zip(ws)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| (x, w))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Quantile-merge coupling cost on the line for cost |x-y|^p, p in {1,2}.
fn line_coupling_cost(mu1: &Measure, mu2: &Measure, p: u32) -> f64 {
    let (x1, w1) = as_weighted_1d(mu1);
    let (x2, w2) = as_weighted_1d(mu2);
    let a = sorted_atoms(&x1, &w1);
    let b = sorted_atoms(&x2, &w2);
    let mut i = 0;
    let mut j = 0;
    let mut ra = a[0].1;
    let mut rb = b[0].1;
    let mut total = 0.0;
    loop {
        let m = ra.min(rb);
        let d = (a[i].0 - b[j].0).abs();
        total += m * if p == 1 { d } else { d * d };
        ra -= m;
        rb -= m;
        if ra <= 1e-18 {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i].1;
        }
        if rb <= 1e-18 {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    total
}

/// W1 on the circle: `min_s  integral |F1 - F2 - s| dx`, s* = weighted median.
fn circle_w1(mu1: &Measure, mu2: &Measure, length: f64) -> f64 {
    let (x1, w1) = as_weighted_1d(mu1);
    let (x2, w2) = as_weighted_1d(mu2);
    // F1 - F2 is piecewise constant between the merged support points
    let mut events: Vec<(f64, f64)> = x1
        .iter()
        .zip(&w1)
        .map(|(&x, &w)| (x, w))
        .chain(x2.iter().zip(&w2).map(|(&x, &w)| (x, -w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    // plateau values of F1-F2 on [x_k, x_{k+1}) weighted by interval length
    let mut plateaus: Vec<(f64, f64)> = Vec::with_capacity(events.len());
    let mut f = 0.0;
    for k in 0..events.len() {
        f += events[k].1;
        let next = if k + 1 < events.len() {
            events[k + 1].0
        } else {
            events[0].0 + length
        };
        let len = next - events[k].0;
        if len > 0.0 {
            plateaus.push((f, len));
        }
    }
    // weighted median of plateau values
    plateaus.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * plateaus.iter().map(|p| p.1).sum::<f64>();
    let mut acc = 0.0;
    let mut median = plateaus[plateaus.len() - 1].0;
    for &(v, len) in &plateaus {
        acc += len;
        if acc >= half {
            median = v;
            break;
        }
    }
    plateaus
        .iter()
        .map(|&(v, len)| (v - median).abs() * len)
        .sum()
}

/// W2^2 on the circle via the universal cover: quantiles of mu2 are lifted by
/// `Q2(t + 1) = Q2(t) + L` and the convex shift functional is minimized by
/// golden-section search.
fn circle_w2_sq(mu1: &Measure, mu2: &Measure, length: f64) -> f64 {
    let (x1, w1) = as_weighted_1d(mu1);
    let (x2, w2) = as_weighted_1d(mu2);
    let a = sorted_atoms(&x1, &w1);
    let b = sorted_atoms(&x2, &w2);

    let cum = |atoms: &[(f64, f64)]| -> Vec<f64> {
        atoms
            .iter()
            .scan(0.0, |s, &(_, w)| {
                *s += w;
                Some(*s)
            })
            .collect()
    };
    let cum_a = cum(&a);
    let cum_b = cum(&b);

    // quantile of a at level t in [0,1)
    let aq = |t: f64| -> f64 {
        let idx = cum_a.partition_point(|&c| c <= t).min(a.len() - 1);
        a[idx].0
    };
    // lifted quantile of b at level u in R: Q(u + 1) = Q(u) + L
    let bq = |u: f64| -> f64 {
        let k = u.floor();
        let frac = u - k;
        let idx = cum_b.partition_point(|&c| c <= frac).min(b.len() - 1);
        b[idx].0 + k * length
    };

    let cost = |theta: f64| -> f64 {
        // integrand is constant between merged breakpoints; evaluate at
        // interval midpoints
        let mut brk: Vec<f64> = Vec::with_capacity(a.len() + b.len() + 2);
        brk.push(0.0);
        brk.push(1.0);
        for &c in cum_a.iter().take(a.len().saturating_sub(1)) {
            brk.push(c);
        }
        for &c in &cum_b {
            let t = (theta + c).rem_euclid(1.0);
            if t > 0.0 && t < 1.0 {
                brk.push(t);
            }
        }
        brk.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in brk.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let d = aq(mid) - bq(mid - theta);
            total += d * d * len;
        }
        total
    };

    // golden-section over theta in [-1, 1] (mass shift of at most one turn)
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut x1g = hi - phi * (hi - lo);
    let mut x2g = lo + phi * (hi - lo);
    let mut f1 = cost(x1g);
    let mut f2 = cost(x2g);
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2g;
            x2g = x1g;
            f2 = f1;
            x1g = hi - phi * (hi - lo);
            f1 = cost(x1g);
        } else {
            lo = x1g;
            x1g = x2g;
            f1 = f2;
            x2g = lo + phi * (hi - lo);
            f2 = cost(x2g);
        }
    }
    f1.min(f2)
}

fn check_domains(mu1: &Measure, mu2: &Measure) -> Result<(), WassersteinError> {
    if mu1.domain != mu2.domain {
        return Err(WassersteinError::DomainMismatch);
    }
    Ok(())
}

fn exact_ot(mu1: &Measure, mu2: &Measure, p: u32) -> Result<f64, WassersteinError> {
    let pts1 = mu1.support_points();
    let pts2 = mu2.support_points();
    if pts1.len() > MAX_EXACT_OT_ATOMS || pts2.len() > MAX_EXACT_OT_ATOMS {
        return Err(WassersteinError::TooLarge);
    }
    let mut cost = Vec::with_capacity(pts1.len() * pts2.len());
    for x in &pts1 {
        for y in &pts2 {
            let d = mu1.domain.distance(*x, *y);
            cost.push(if p == 1 { d } else { d * d });
        }
    }
    transport_cost(mu1.masses(), mu2.masses(), &cost).map_err(WassersteinError::Solver)
}

/// Kantorovich-Rubinstein distance between probability measures.
pub fn wasserstein1(mu1: &Measure, mu2: &Measure) -> Result<f64, WassersteinError> {
    check_domains(mu1, mu2)?;
    if mu1.domain.dim() == 1 {
        match mu1.domain.axis(0) {
            Axis::Line => Ok(line_coupling_cost(mu1, mu2, 1)),
            Axis::Torus { length } => Ok(circle_w1(mu1, mu2, length)),
        }
    } else {
        exact_ot(mu1, mu2, 1)
    }
}

/// Quadratic Wasserstein distance between probability measures.
pub fn wasserstein2(mu1: &Measure, mu2: &Measure) -> Result<f64, WassersteinError> {
    check_domains(mu1, mu2)?;
    let sq = if mu1.domain.dim() == 1 {
        match mu1.domain.axis(0) {
            Axis::Line => line_coupling_cost(mu1, mu2, 2),
            Axis::Torus { length } => circle_w2_sq(mu1, mu2, length),
        }
    } else {
        exact_ot(mu1, mu2, 2)?
    };
    Ok(sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::domain::Domain;

    fn diracs_on_line(d: f64) -> (Measure, Measure) {
        let dom = Domain::line();
        let m1 = Measure::atomic(dom, vec![[0.0, 0.0]], vec![1.0]).unwrap();
        let m2 = Measure::atomic(dom, vec![[d, 0.0]], vec![1.0]).unwrap();
        (m1, m2)
    }

    #[test]
    fn identical_measures_are_at_zero() {
        let dom = Domain::torus(1.0);
        let mu = Measure::atomic_normalized(
            dom,
            vec![[0.1, 0.0], [0.6, 0.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        assert!(wasserstein1(&mu, &mu).unwrap() < 1e-14);
        assert!(wasserstein2(&mu, &mu).unwrap() < 1e-9);
    }

    #[test]
    fn dirac_distance_is_displacement() {
        let (m1, m2) = diracs_on_line(1.75);
        assert!((wasserstein1(&m1, &m2).unwrap() - 1.75).abs() < 1e-12);
        assert!((wasserstein2(&m1, &m2).unwrap() - 1.75).abs() < 1e-9);
    }

    #[test]
    fn circle_wraps_mass_the_short_way() {
        let dom = Domain::torus(1.0);
        let m1 = Measure::atomic(dom, vec![[0.05, 0.0]], vec![1.0]).unwrap();
        let m2 = Measure::atomic(dom, vec![[0.95, 0.0]], vec![1.0]).unwrap();
        assert!((wasserstein1(&m1, &m2).unwrap() - 0.1).abs() < 1e-12);
        assert!((wasserstein2(&m1, &m2).unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn w1_never_exceeds_w2() {
        let dom = Domain::line();
        let m1 = Measure::atomic_normalized(
            dom,
            vec![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]],
            vec![1.0, 1.0, 2.0],
        )
        .unwrap();
        let m2 = Measure::atomic_normalized(
            dom,
            vec![[0.5, 0.0], [2.0, 0.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let w1 = wasserstein1(&m1, &m2).unwrap();
        let w2 = wasserstein2(&m1, &m2).unwrap();
        assert!(w1 <= w2 + 1e-12, "{w1} vs {w2}");
    }

    #[test]
    fn oversized_2d_instance_errors() {
        let dom = Domain::product(Axis::Line, Axis::Line);
        let pts: Vec<[f64; 2]> = (0..MAX_EXACT_OT_ATOMS + 1)
            .map(|i| [i as f64, 0.0])
            .collect();
        let mu = Measure::empirical(dom, pts).unwrap();
        let small = Measure::atomic(dom, vec![[0.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(
            wasserstein1(&mu, &small),
            Err(WassersteinError::TooLarge)
        );
    }

    #[test]
    fn line_quantile_matches_network_simplex() {
        // cross-check the two independent W1 routes on the line
        let dom = Domain::line();
        let m1 = Measure::atomic_normalized(
            dom,
            vec![[0.1, 0.0], [0.9, 0.0], [2.3, 0.0], [4.0, 0.0]],
            vec![0.3, 0.4, 0.2, 0.6],
        )
        .unwrap();
        let m2 = Measure::atomic_normalized(
            dom,
            vec![[0.0, 0.0], [1.5, 0.0], [3.1, 0.0]],
            vec![0.5, 0.8, 0.2],
        )
        .unwrap();
        let quantile = wasserstein1(&m1, &m2).unwrap();
        let ns = super::exact_ot(&m1, &m2, 1).unwrap();
        assert!((quantile - ns).abs() < 1e-10, "{quantile} vs {ns}");
    }

    #[test]
    fn circle_w2_matches_network_simplex() {
        let dom = Domain::torus(1.0);
        let m1 = Measure::atomic_normalized(
            dom,
            vec![[0.02, 0.0], [0.3, 0.0], [0.75, 0.0]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let m2 = Measure::atomic_normalized(
            dom,
            vec![[0.1, 0.0], [0.55, 0.0], [0.9, 0.0], [0.98, 0.0]],
            vec![0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        let w2 = wasserstein2(&m1, &m2).unwrap();
        let ns = super::exact_ot(&m1, &m2, 2).unwrap().sqrt();
        assert!((w2 - ns).abs() < 1e-7, "{w2} vs {ns}");
        let w1 = wasserstein1(&m1, &m2).unwrap();
        let ns1 = super::exact_ot(&m1, &m2, 1).unwrap();
        assert!((w1 - ns1).abs() < 1e-10, "{w1} vs {ns1}");
    }
}
