//! Decomposable regularizers for the sparse component.
//!
//! Two regularizers are supported: the elementwise l1 norm (dual: elementwise
//! max) and the columnwise (2,1) norm (dual: largest column l2 norm). Each
//! comes with its proximal map, the spikiness functional
//! `phi(theta) = kappa * dual(theta)` that constrains the low-rank component,
//! the Euclidean projection onto `{phi <= alpha}`, and the model subspace
//! split used by decomposability arguments.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{norm, DenseMatrix, NormKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegularizerKind {
    ElementwiseL1,
    Columnwise21,
}

impl RegularizerKind {
    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::ElementwiseL1 => "l1",
            RegularizerKind::Columnwise21 => "col21",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(RegularizerKind::ElementwiseL1),
            "col21" => Ok(RegularizerKind::Columnwise21),
            other => Err(Error::invalid("regularizer", format!("unknown `{other}` (expected l1 or col21)"))),
        }
    }
}

/// Index set defining the model subspace: entries for l1, columns for (2,1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    Entries(BTreeSet<(usize, usize)>),
    Columns(BTreeSet<usize>),
}

impl Support {
    pub fn empty(kind: RegularizerKind) -> Self {
        match kind {
            RegularizerKind::ElementwiseL1 => Support::Entries(BTreeSet::new()),
            RegularizerKind::Columnwise21 => Support::Columns(BTreeSet::new()),
        }
    }

    pub fn full(kind: RegularizerKind, rows: usize, cols: usize) -> Self {
        match kind {
            RegularizerKind::ElementwiseL1 => {
                Support::Entries((0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect())
            }
            RegularizerKind::Columnwise21 => Support::Columns((0..cols).collect()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Support::Entries(s) => s.len(),
            Support::Columns(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> RegularizerKind {
        match self {
            Support::Entries(_) => RegularizerKind::ElementwiseL1,
            Support::Columns(_) => RegularizerKind::Columnwise21,
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        match self {
            Support::Entries(s) => s.contains(&(row, col)),
            Support::Columns(c) => c.contains(&col),
        }
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        let bad = match self {
            Support::Entries(s) => s.iter().find(|&&(i, j)| i >= rows || j >= cols).copied(),
            Support::Columns(c) => c.iter().find(|&&j| j >= cols).map(|&j| (0, j)),
        };
        match bad {
            Some(index) => Err(Error::SupportOutOfRange { index, rows, cols }),
            None => Ok(()),
        }
    }

    /// Sorted index list, one record per line: `row,col` for entries, `col` for columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Support::Entries(s) => {
                out.push_str("row,col\n");
                for (i, j) in s {
                    out.push_str(&format!("{i},{j}\n"));
                }
            }
            Support::Columns(c) => {
                out.push_str("col\n");
                for j in c {
                    out.push_str(&format!("{j}\n"));
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing support header".into(),
        })?;
        let parse = |no: usize, tok: &str| {
            tok.trim().parse::<usize>().map_err(|e| Error::Parse {
                line: no + 1,
                message: format!("bad index `{tok}`: {e}"),
            })
        };
        match header.trim() {
            "row,col" => {
                let mut set = BTreeSet::new();
                for (no, line) in lines {
                    let (a, b) = line.split_once(',').ok_or(Error::Parse {
                        line: no + 1,
                        message: "expected `row,col`".into(),
                    })?;
                    set.insert((parse(no, a)?, parse(no, b)?));
                }
                Ok(Support::Entries(set))
            }
            "col" => lines
                .map(|(no, line)| parse(no, line))
                .collect::<Result<_>>()
                .map(Support::Columns),
            other => Err(Error::Parse {
                line: 1,
                message: format!("unknown support header `{other}`"),
            }),
        }
    }
}

/// Penalty weights of the composite program; `alpha = f64::INFINITY` drops the spikiness constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyParams {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl PenaltyParams {
    pub fn new(lambda: f64, mu: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be finite and >= 0, got {mu}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        Ok(Self { lambda, mu, alpha })
    }
}

pub fn reg_value(kind: RegularizerKind, g: &DenseMatrix) -> f64 {
    match kind {
        RegularizerKind::ElementwiseL1 => norm(g, NormKind::ElementwiseL1),
        RegularizerKind::Columnwise21 => norm(g, NormKind::Col21),
    }
}

pub fn dual_value(kind: RegularizerKind, m: &DenseMatrix) -> f64 {
    match kind {
        RegularizerKind::ElementwiseL1 => norm(m, NormKind::ElementwiseLinf),
        RegularizerKind::Columnwise21 => norm(m, NormKind::Col2Inf),
    }
}

/// `kappa_d(R*)`: `sqrt(d1 d2)` for l1, `sqrt(d2)` for (2,1).
pub fn kappa(kind: RegularizerKind, d1: usize, d2: usize) -> f64 {
    match kind {
        RegularizerKind::ElementwiseL1 => ((d1 * d2) as f64).sqrt(),
        RegularizerKind::Columnwise21 => (d2 as f64).sqrt(),
    }
}

/// Subspace compatibility constant `sup R(U)/||U||_F` over the model subspace; `sqrt(|support|)` for both norms.
pub fn compatibility(kind: RegularizerKind, support: &Support) -> Result<f64> {
    if support.kind() != kind {
        return Err(Error::SupportKindMismatch(kind.name()));
    }
    Ok((support.len() as f64).sqrt())
}

/// Proximal map `argmin_Z 1/2 ||Z - m||_F^2 + threshold * R(Z)`.
pub fn prox(kind: RegularizerKind, m: &DenseMatrix, threshold: f64) -> DenseMatrix {
    debug_assert!(threshold >= 0.0);
    if threshold == 0.0 {
        return m.clone();
    }
    match kind {
        RegularizerKind::ElementwiseL1 => m.map(|x| soft_threshold(x, threshold)),
        RegularizerKind::Columnwise21 => {
            let norms = m.column_norms();
            // Columns with norm <= threshold (including the zero column) vanish.
            let scales: Vec<f64> = norms
                .iter()
                .map(|&n| if n > threshold { 1.0 - threshold / n } else { 0.0 })
                .collect();
            let mut out = m.clone();
            let cols = m.cols();
            for row in out.as_mut_slice().chunks_exact_mut(cols) {
                for (v, s) in row.iter_mut().zip(&scales) {
                    *v *= s;
                }
            }
            out
        }
    }
}

#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `phi_R(theta) = kappa(kind, dims) * dual_value(kind, theta)`.
pub fn spikiness(kind: RegularizerKind, theta: &DenseMatrix) -> f64 {
    kappa(kind, theta.rows(), theta.cols()) * dual_value(kind, theta)
}

/// Euclidean projection onto `{Z : spikiness(kind, Z) <= alpha}`.
pub fn project_spikiness_ball(kind: RegularizerKind, theta: &DenseMatrix, alpha: f64) -> DenseMatrix {
    debug_assert!(alpha > 0.0);
    if alpha.is_infinite() {
        return theta.clone();
    }
    let bound = alpha / kappa(kind, theta.rows(), theta.cols());
    match kind {
        RegularizerKind::ElementwiseL1 => theta.map(|x| x.clamp(-bound, bound)),
        RegularizerKind::Columnwise21 => {
            let mut out = theta.clone();
            for (k, n) in theta.column_norms().into_iter().enumerate() {
                if n <= bound {
                    continue;
                }
                let col = theta.column(k);
                // Rounding can leave the rescaled norm an ulp above the bound;
                // stepping the scale down keeps the result a fixed point.
                let mut scale = bound / n;
                let mut scaled: Vec<f64> = col.iter().map(|v| v * scale).collect();
                while scaled.iter().map(|v| v * v).sum::<f64>().sqrt() > bound {
                    scale = scale.next_down();
                    scaled = col.iter().map(|v| v * scale).collect();
                }
                out.set_column(k, &scaled);
            }
            out
        }
    }
}

/// Splits `g` into its component on the model subspace and the orthogonal remainder.
pub fn subspace_split(
    kind: RegularizerKind,
    support: &Support,
    g: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if support.kind() != kind {
        return Err(Error::SupportKindMismatch(kind.name()));
    }
    support.validate(g.rows(), g.cols())?;
    let inside = DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| {
        if support.contains(i, j) {
            g[(i, j)]
        } else {
            0.0
        }
    });
    let outside = g - &inside;
    Ok((inside, outside))
}

#[cfg(test)]
mod tests {
    use super::*;
    use RegularizerKind::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn values_and_duals() {
        assert_eq!(reg_value(ElementwiseL1, &m(&[&[1.0, -2.0], &[0.0, 3.0]])), 6.0);
        assert_eq!(reg_value(Columnwise21, &m(&[&[3.0, 0.0], &[4.0, 0.0]])), 5.0);
        assert_eq!(reg_value(ElementwiseL1, &DenseMatrix::zeros(2, 2)), 0.0);
        assert_eq!(dual_value(ElementwiseL1, &m(&[&[1.0, -7.0], &[2.0, 0.0]])), 7.0);
        assert_eq!(dual_value(Columnwise21, &m(&[&[3.0, 1.0], &[4.0, 0.0]])), 5.0);
    }

    #[test]
    fn kappa_and_compatibility() {
        assert_eq!(kappa(ElementwiseL1, 4, 9), 6.0);
        assert_eq!(kappa(Columnwise21, 7, 16), 4.0);
        assert_eq!(kappa(ElementwiseL1, 1, 1), 1.0);

        let s = Support::Entries((0..9).map(|k| (k / 3, k % 3)).collect());
        assert_eq!(compatibility(ElementwiseL1, &s).unwrap(), 3.0);
        let c = Support::Columns([0, 2, 5, 7].into_iter().collect());
        assert_eq!(compatibility(Columnwise21, &c).unwrap(), 2.0);
        assert_eq!(compatibility(Columnwise21, &Support::empty(Columnwise21)).unwrap(), 0.0);
        assert!(compatibility(ElementwiseL1, &c).is_err());
    }

    #[test]
    fn prox_closed_forms() {
        let p = prox(ElementwiseL1, &m(&[&[3.0, -0.5]]), 1.0);
        assert_eq!(p.as_slice(), &[2.0, 0.0]);

        let p = prox(Columnwise21, &m(&[&[3.0], &[4.0]]), 2.5);
        assert_eq!(p.as_slice(), &[1.5, 2.0]);

        let x = m(&[&[1.0, -2.0], &[0.25, 3.0]]);
        assert_eq!(prox(ElementwiseL1, &x, 0.0), x);
        assert_eq!(prox(Columnwise21, &x, 0.0), x);
    }

    #[test]
    fn column_prox_at_zero_and_at_tie() {
        let x = m(&[&[0.0, 3.0], &[0.0, 4.0]]);
        let p = prox(Columnwise21, &x, 5.0);
        assert_eq!(p, DenseMatrix::zeros(2, 2));
        assert!(p.is_finite());
    }

    #[test]
    fn spikiness_examples() {
        let c = DenseMatrix::from_fn(10, 10, |_, _| 0.1);
        assert!((spikiness(ElementwiseL1, &c) - 1.0).abs() < 1e-15);

        let mut t = DenseMatrix::zeros(3, 4);
        t[(0, 1)] = 0.3;
        t[(1, 1)] = 0.4;
        assert!((spikiness(Columnwise21, &t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        // bound b = alpha / sqrt(1) = 1 for a 1x1 matrix.
        let p = project_spikiness_ball(ElementwiseL1, &m(&[&[10.0]]), 1.0);
        assert_eq!(p.as_slice(), &[1.0]);

        let feasible = m(&[&[0.1, -0.2], &[0.0, 0.3]]);
        assert_eq!(project_spikiness_ball(ElementwiseL1, &feasible, 2.0), feasible);
        assert_eq!(project_spikiness_ball(Columnwise21, &feasible, 2.0), feasible);
        assert_eq!(project_spikiness_ball(ElementwiseL1, &m(&[&[1e9]]), f64::INFINITY).as_slice(), &[1e9]);
    }

    #[test]
    fn split_edge_cases() {
        let g = m(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let (a, b) = subspace_split(ElementwiseL1, &Support::full(ElementwiseL1, 2, 2), &g).unwrap();
        assert_eq!(a, g);
        assert_eq!(b, DenseMatrix::zeros(2, 2));
        let (a, b) = subspace_split(Columnwise21, &Support::empty(Columnwise21), &g).unwrap();
        assert_eq!(a, DenseMatrix::zeros(2, 2));
        assert_eq!(b, g);

        let bad = Support::Columns([3].into_iter().collect());
        assert!(matches!(
            subspace_split(Columnwise21, &bad, &g),
            Err(Error::SupportOutOfRange { .. })
        ));
    }

    #[test]
    fn support_csv_round_trip() {
        let s = Support::Entries([(3, 1), (0, 2)].into_iter().collect());
        assert_eq!(s.to_csv(), "row,col\n0,2\n3,1\n");
        assert_eq!(Support::from_csv(&s.to_csv()).unwrap(), s);
        let c = Support::Columns([4, 1].into_iter().collect());
        assert_eq!(Support::from_csv(&c.to_csv()).unwrap(), c);
    }

    #[test]
    fn penalty_validation() {
        assert!(PenaltyParams::new(0.0, 0.0, f64::INFINITY).is_ok());
        assert!(PenaltyParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(PenaltyParams::new(1.0, 0.0, 0.0).is_err());
        assert!(PenaltyParams::new(1.0, f64::NAN, 1.0).is_err());
    }
}
