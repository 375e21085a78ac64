//! Conversion between a GBN and its multivariate normal in precision form.

use nalgebra::{DMatrix, DVector};

use crate::error::GbnError;
use crate::gauss::Mgd;

use super::{Direction, Gbn, GbnNode, MotionType};

/// Build the precision matrix one node at a time:
///
/// ```text
/// T_{i+1} = | T_i + b b^T / s2   -b / s2 |
///           | -b^T / s2           1 / s2 |
/// ```
///
/// where `b` holds node i+1's coefficients on nodes 1..=i (zero for non-parents).
pub fn precision_recursive(g: &Gbn) -> Mgd {
    let n = g.len();
    let mut t = DMatrix::<f64>::zeros(0, 0);
    for (i, node) in g.nodes().iter().enumerate() {
        let mut b = DVector::<f64>::zeros(i);
        for &(p, coef) in &node.parents {
            b[p] += coef;
        }
        let inv = 1.0 / node.variance;
        let mut next = DMatrix::<f64>::zeros(i + 1, i + 1);
        next.view_mut((0, 0), (i, i)).copy_from(&(&t + &b * b.transpose() * inv));
        for k in 0..i {
            next[(k, i)] = -b[k] * inv;
            next[(i, k)] = -b[k] * inv;
        }
        next[(i, i)] = inv;
        t = next;
    }
    debug_assert_eq!(t.nrows(), n);
    Mgd {
        mean: DVector::from_vec(g.means()),
        precision: t,
    }
}

/// Closed-form tridiagonal precision of a chain.
pub fn precision_chain(g: &Gbn) -> Result<Mgd, GbnError> {
    if !g.is_chain() {
        return Err(GbnError::NotChain);
    }
    let n = g.len();
    let s2 = g.variances();
    let b = g.chain_coefficients();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = 1.0 / s2[i];
        if i + 1 < n {
            t[(i, i)] += b[i] * b[i] / s2[i + 1];
            t[(i, i + 1)] = -b[i] / s2[i + 1];
            t[(i + 1, i)] = -b[i] / s2[i + 1];
        }
    }
    Ok(Mgd {
        mean: DVector::from_vec(g.means()),
        precision: t,
    })
}

/// Relative size below which an off-band entry counts as zero in [`extract`].
const TRIDIAGONAL_TOLERANCE: f64 = 1e-9;

/// Recover chain parameters from a tridiagonal precision matrix.
///
/// Nodes get generic labels `x1..xn`; use [`Gbn::with_layout_of`] to restore
/// motion metadata.
pub fn extract(mgd: &Mgd) -> Result<Gbn, GbnError> {
    let t = &mgd.precision;
    let scale = t.amax().max(f64::MIN_POSITIVE);
    for r in 0..t.nrows() {
        for c in 0..t.ncols() {
            if r.abs_diff(c) > 1 && t[(r, c)].abs() > TRIDIAGONAL_TOLERANCE * scale {
                return Err(GbnError::NotTridiagonal {
                    row: r + 1,
                    col: c + 1,
                    value: t[(r, c)],
                });
            }
        }
    }
    extract_banded(mgd)
}

/// Like [`extract`], but entries outside the tridiagonal band are ignored.
///
/// A precision learned from data is dense; for data generated by a chain its
/// off-band entries are sampling noise around zero.
pub fn extract_banded(mgd: &Mgd) -> Result<Gbn, GbnError> {
    let t = &mgd.precision;
    let n = mgd.dim();
    if t.nrows() != n || t.ncols() != n {
        return Err(GbnError::SizeMismatch {
            expected: n,
            found: t.nrows(),
        });
    }
    if n == 0 {
        return Gbn::new(Vec::new());
    }
    let mut var = vec![0.0; n];
    let mut coef = vec![0.0; n.saturating_sub(1)];
    var[n - 1] = 1.0 / t[(n - 1, n - 1)];
    for i in (0..n - 1).rev() {
        let off = 0.5 * (t[(i, i + 1)] + t[(i + 1, i)]);
        coef[i] = -off * var[i + 1];
        let rest = t[(i, i)] - coef[i] * coef[i] / var[i + 1];
        var[i] = 1.0 / rest;
    }
    for (i, &v) in var.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(GbnError::NegativeRecoveredVariance { node: i + 1, variance: v });
        }
    }
    let nodes = (0..n)
        .map(|i| {
            let node = GbnNode::new(&format!("x{}", i + 1), MotionType::Drive, Direction::Forward, mgd.mean[i], var[i]);
            if i == 0 {
                node
            } else {
                node.with_parent(i - 1, coef[i - 1])
            }
        })
        .collect();
    Gbn::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbn::{alternating_layout, REFERENCE_COEFFICIENTS, REFERENCE_VARIANCES};

    fn reference_chain() -> Gbn {
        let layout = alternating_layout(7);
        let layout: Vec<_> = layout.iter().map(|(l, m, d)| (l.as_str(), *m, *d)).collect();
        Gbn::chain(&layout, &[0.0; 7], &REFERENCE_VARIANCES, &REFERENCE_COEFFICIENTS).unwrap()
    }

    #[test]
    fn single_node_precision() {
        let g = Gbn::new(vec![GbnNode::new("l1", MotionType::Drive, Direction::Backward, 0.55, 0.0062)]).unwrap();
        let t = precision_recursive(&g).precision;
        assert_eq!(t.shape(), (1, 1));
        assert!((t[(0, 0)] - 161.290_322_580_645_16).abs() < 1e-9);
        assert_eq!(precision_chain(&g).unwrap().precision, t);
    }

    #[test]
    fn two_node_off_diagonal() {
        let g = Gbn::chain(
            &[("a", MotionType::Drive, Direction::Forward), ("b", MotionType::Turn, Direction::Forward)],
            &[0.0, 0.0],
            &[0.0062, 0.0032],
            &[0.7968],
        )
        .unwrap();
        let t = precision_recursive(&g).precision;
        assert!((t[(0, 1)] + 249.0).abs() < 1e-9);
        assert_eq!(t[(0, 1)], t[(1, 0)]);
        assert!((t[(1, 1)] - 312.5).abs() < 1e-9);
        assert!((t[(0, 0)] - (1.0 / 0.0062 + 0.7968f64.powi(2) / 0.0032)).abs() < 1e-9);
    }

    #[test]
    fn seven_node_pattern_is_tridiagonal() {
        let g = reference_chain();
        let t = precision_recursive(&g).precision;
        let s2 = REFERENCE_VARIANCES;
        let b = REFERENCE_COEFFICIENTS;
        for r in 0..7 {
            for c in 0..7 {
                let want = if r == c {
                    1.0 / s2[r] + if r < 6 { b[r] * b[r] / s2[r + 1] } else { 0.0 }
                } else if c == r + 1 {
                    -b[r] / s2[r + 1]
                } else if r == c + 1 {
                    -b[c] / s2[c + 1]
                } else {
                    0.0
                };
                if want == 0.0 {
                    assert_eq!(t[(r, c)], 0.0, "({r},{c})");
                } else {
                    assert!((t[(r, c)] - want).abs() <= 1e-12 * want.abs(), "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn non_chain_is_rejected_by_closed_form() {
        let a = GbnNode::new("a", MotionType::Drive, Direction::Forward, 0.0, 1.0);
        let b = GbnNode::new("b", MotionType::Drive, Direction::Forward, 0.0, 1.0);
        let c = GbnNode::new("c", MotionType::Drive, Direction::Forward, 0.0, 1.0)
            .with_parent(0, 0.5)
            .with_parent(1, 0.5);
        let g = Gbn::new(vec![a, b, c]).unwrap();
        assert_eq!(precision_chain(&g), Err(GbnError::NotChain));
        // The recursion handles the DAG; the v-structure couples a and b.
        let t = precision_recursive(&g).precision;
        assert!((t[(0, 1)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn extract_round_trip_reference_values() {
        let g = reference_chain();
        let back = extract(&precision_chain(&g).unwrap()).unwrap();
        for (a, b) in back.variances().iter().zip(REFERENCE_VARIANCES) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in back.chain_coefficients().iter().zip(REFERENCE_COEFFICIENTS) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_precision_gives_independent_standard_nodes() {
        let mgd = Mgd::new(DVector::zeros(4), DMatrix::identity(4, 4)).unwrap();
        let g = extract(&mgd).unwrap();
        assert_eq!(g.variances(), vec![1.0; 4]);
        assert!(g.chain_coefficients().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn extract_rejects_dense_and_inconsistent_input() {
        let mut t = DMatrix::identity(3, 3);
        t[(0, 2)] = 0.5;
        t[(2, 0)] = 0.5;
        let mgd = Mgd::new(DVector::zeros(3), t).unwrap();
        assert!(matches!(extract(&mgd), Err(GbnError::NotTridiagonal { row: 1, col: 3, .. })));
        assert!(extract_banded(&mgd).is_ok());

        let mut t = DMatrix::identity(2, 2);
        t[(0, 1)] = -2.0;
        t[(1, 0)] = -2.0;
        let mgd = Mgd::new(DVector::zeros(2), t).unwrap();
        assert!(matches!(
            extract(&mgd),
            Err(GbnError::NegativeRecoveredVariance { node: 1, .. })
        ));
    }
}
