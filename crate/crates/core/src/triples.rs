//! Projection triples and the bottleneck metric on them.
//!
//! A triple is two families of n pairwise-orthogonal rank-one projections
//! together with a bijection pairing them. The distance between two triples
//! is the smallest achievable worst-case projection distance over all
//! re-pairings, counting both the direct family and the image family. Any
//! pairing achieving a value below 1/2 is the unique minimizer, which is the
//! certification the chart machinery leans on.

use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::perm::Permutation;

/// Two orthogonal rank-one families plus a pairing, stored by their unit
/// spanning vectors; projections are formed on demand.
#[derive(Debug, Clone)]
pub struct ProjectionTriple {
    pub p_vecs: Vec<CVector>,
    pub q_vecs: Vec<CVector>,
    pub sigma: Permutation,
    /// Optional eigenvalue tags carried along for label matching.
    pub labels: Option<Vec<C64>>,
}

impl ProjectionTriple {
    pub fn new(p_vecs: Vec<CVector>, q_vecs: Vec<CVector>, sigma: Permutation) -> Result<Self> {
        if p_vecs.len() != q_vecs.len() || sigma.len() != p_vecs.len() {
            return Err(Error::SizeMismatch(p_vecs.len(), q_vecs.len()));
        }
        Ok(ProjectionTriple {
            p_vecs,
            q_vecs,
            sigma,
            labels: None,
        })
    }

    pub fn len(&self) -> usize {
        self.p_vecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_vecs.is_empty()
    }

    pub fn p_projection(&self, i: usize) -> CMatrix {
        matrix::rank_one(&self.p_vecs[i])
    }

    pub fn q_projection(&self, i: usize) -> CMatrix {
        matrix::rank_one(&self.q_vecs[i])
    }

    /// Worst pairwise-orthogonality defect across both families.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for fam in [&self.p_vecs, &self.q_vecs] {
            for i in 0..fam.len() {
                for j in 0..i {
                    worst = worst.max(matrix::inner(&fam[i], &fam[j]).norm());
                }
            }
        }
        worst
    }
}

/// `||p - q||` for rank-one projections with unit representatives `v`, `w`:
/// exactly `sqrt(1 - |<v,w>|^2)`.
///
/// The overlap is normalized by the actual vector norms, so bitwise-equal
/// representatives give exactly zero regardless of rounding in their
/// normalization.
pub fn rank1_distance(v: &CVector, w: &CVector) -> f64 {
    let nv = matrix::inner(v, v).re;
    let nw = matrix::inner(w, w).re;
    let overlap = matrix::inner(v, w).norm_sqr() / (nv * nw);
    (1.0 - overlap.min(1.0)).max(0.0).sqrt()
}

/// Result of a bottleneck assignment between two triples.
#[derive(Debug, Clone)]
pub struct BottleneckMatch {
    pub tau: Permutation,
    pub value: f64,
    /// Set when value < 1/2: the minimizing pairing is then unique.
    pub certified_unique: bool,
}

fn cost_matrix(a: &ProjectionTriple, b: &ProjectionTriple) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let direct = rank1_distance(&a.p_vecs[i], &b.p_vecs[j]);
            let image = rank1_distance(&a.q_vecs[a.sigma.apply(i)], &b.q_vecs[b.sigma.apply(j)]);
            c[i][j] = direct.max(image);
        }
    }
    c
}

/// Kuhn-style augmenting path search on the subgraph of edges with cost
/// below the threshold. `fixed` pins earlier rows during lexicographic
/// reconstruction; pass usize::MAX for free rows.
fn perfect_matching(c: &[Vec<f64>], limit: f64, fixed: &[usize]) -> Option<Vec<usize>> {
    let n = c.len();
    let mut match_of_col = vec![usize::MAX; n];
    let mut match_of_row = vec![usize::MAX; n];
    for (i, &f) in fixed.iter().enumerate() {
        if f != usize::MAX {
            if c[i][f] > limit || match_of_col[f] != usize::MAX {
                return None;
            }
            match_of_col[f] = i;
            match_of_row[i] = f;
        }
    }

    fn try_augment(
        c: &[Vec<f64>],
        limit: f64,
        fixed: &[usize],
        row: usize,
        seen: &mut [bool],
        match_of_col: &mut [usize],
        match_of_row: &mut [usize],
    ) -> bool {
        let n = c.len();
        for j in 0..n {
            if c[row][j] <= limit && !seen[j] {
                seen[j] = true;
                let owner = match_of_col[j];
                // rows with pinned columns may not be rerouted
                let reroutable = owner == usize::MAX
                    || (fixed[owner] == usize::MAX
                        && try_augment(c, limit, fixed, owner, seen, match_of_col, match_of_row));
                if reroutable {
                    match_of_col[j] = row;
                    match_of_row[row] = j;
                    return true;
                }
            }
        }
        false
    }

    for i in 0..n {
        if match_of_row[i] != usize::MAX {
            continue;
        }
        let mut seen = vec![false; n];
        if !try_augment(
            c,
            limit,
            fixed,
            i,
            &mut seen,
            &mut match_of_col,
            &mut match_of_row,
        ) {
            return None;
        }
    }
    Some(match_of_row)
}

/// Exact bottleneck assignment: binary search over the sorted distinct edge
/// costs for the smallest feasible threshold, then the lexicographically
/// smallest perfect matching at that threshold.
pub fn bottleneck_distance(a: &ProjectionTriple, b: &ProjectionTriple) -> Result<BottleneckMatch> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n == 0 {
        return Ok(BottleneckMatch {
            tau: Permutation::identity(0),
            value: 0.0,
            certified_unique: true,
        });
    }
    let c = cost_matrix(a, b);
    let mut costs: Vec<f64> = c.iter().flatten().copied().collect();
    costs.sort_by(|x, y| x.partial_cmp(y).expect("finite costs"));
    costs.dedup();

    let free = vec![usize::MAX; n];
    let mut lo = 0usize;
    let mut hi = costs.len() - 1;
    if perfect_matching(&c, costs[hi], &free).is_none() {
        return Err(Error::PreconditionViolated(
            "no perfect matching exists at any threshold".to_string(),
        ));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(&c, costs[mid], &free).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = costs[lo];

    // lexicographically smallest optimal pairing: pin rows one at a time
    let mut fixed = vec![usize::MAX; n];
    for i in 0..n {
        for j in 0..n {
            if c[i][j] <= value {
                fixed[i] = j;
                if perfect_matching(&c, value, &fixed).is_some() {
                    break;
                }
                fixed[i] = usize::MAX;
            }
        }
        if fixed[i] == usize::MAX {
            return Err(Error::PreconditionViolated(
                "lexicographic reconstruction failed".to_string(),
            ));
        }
    }
    Ok(BottleneckMatch {
        tau: Permutation::from_map(fixed)?,
        value,
        certified_unique: value < 0.5,
    })
}

/// Distance between the realizing pairings of two triples near a common
/// reference: with both distances below 1/4 the minimizers are unique, and
/// the returned worst pairwise gap is bounded by `d(a, b)`.
pub fn match_stability(
    reference: &ProjectionTriple,
    a: &ProjectionTriple,
    b: &ProjectionTriple,
) -> Result<f64> {
    let ma = bottleneck_distance(reference, a)?;
    let mb = bottleneck_distance(reference, b)?;
    if ma.value >= 0.25 || mb.value >= 0.25 {
        return Err(Error::PreconditionViolated(format!(
            "match_stability needs both distances below 1/4, got {:.4} and {:.4}",
            ma.value, mb.value
        )));
    }
    let mut worst = 0.0_f64;
    for i in 0..reference.len() {
        let ja = ma.tau.apply(i);
        let jb = mb.tau.apply(i);
        let direct = rank1_distance(&a.p_vecs[ja], &b.p_vecs[jb]);
        let image = rank1_distance(&a.q_vecs[a.sigma.apply(ja)], &b.q_vecs[b.sigma.apply(jb)]);
        worst = worst.max(direct.max(image));
    }
    Ok(worst)
}

/// Transport a vector of `ran(p)` onto `ran(p_new)` by `I + p_new - p`;
/// nonzero whenever the projections are strictly closer than 1.
pub fn transport_projection(p_vec: &CVector, p_new_vec: &CVector, v: &CVector) -> Result<CVector> {
    let dist = rank1_distance(p_vec, p_new_vec);
    if dist >= 1.0 - 1e-12 {
        return Err(Error::TooFar(dist));
    }
    // (I + p_new - p) v = v + p_new v - p v
    let pv = p_vec.mapv(|z| z * matrix::inner(p_vec, v));
    let pnv = p_new_vec.mapv(|z| z * matrix::inner(p_new_vec, v));
    Ok(v + &pnv - &pv)
}

/// Unit-modulus chart coordinates of an intertwiner.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugePhases(pub Vec<C64>);

impl GaugePhases {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn intertwining_defect(u: &CMatrix, triple: &ProjectionTriple) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..triple.len() {
        let p = triple.p_projection(i);
        let q = triple.q_projection(triple.sigma.apply(i));
        let lhs = u.dot(&p).dot(&matrix::adjoint(u));
        worst = worst.max(matrix::op_norm(&(&lhs - &q)));
    }
    worst
}

/// Chart coordinates of `u` over the chart centered at `reference`: the
/// phases picked up against the transported reference vectors.
///
/// `u` must intertwine `near` (map each p-line onto its sigma-partner
/// q-line); the reference vectors are the stored representatives of the
/// chart center.
pub fn extract_phases(
    reference: &ProjectionTriple,
    near: &ProjectionTriple,
    u: &CMatrix,
    lift_tol: f64,
) -> Result<GaugePhases> {
    let m = bottleneck_distance(reference, near)?;
    if m.value >= 0.25 {
        return Err(Error::PreconditionViolated(format!(
            "chart condition needs d < 1/4, got {:.4}",
            m.value
        )));
    }
    let defect = intertwining_defect(u, near);
    if defect > lift_tol {
        return Err(Error::NotIntertwining(defect));
    }
    let mut phases = Vec::with_capacity(reference.len());
    for i in 0..reference.len() {
        let j = m.tau.apply(i);
        let a = matrix::normalize(&transport_projection(
            &reference.p_vecs[i],
            &near.p_vecs[j],
            &reference.p_vecs[i],
        )?);
        let b = matrix::normalize(&transport_projection(
            &reference.q_vecs[reference.sigma.apply(i)],
            &near.q_vecs[near.sigma.apply(j)],
            &reference.q_vecs[reference.sigma.apply(i)],
        )?);
        let ua = u.dot(&a);
        let z = matrix::inner(&b, &ua);
        if (z.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::NotIntertwining(1.0 - z.norm()));
        }
        phases.push(z / z.norm());
    }
    Ok(GaugePhases(phases))
}

/// Twist an intertwiner by unit phases on each paired line:
/// `sum_i z_i q_{sigma(i)} U p_i`. The result intertwines the same triple.
pub fn apply_gauge(
    u: &CMatrix,
    phases: &GaugePhases,
    triple: &ProjectionTriple,
    lift_tol: f64,
) -> Result<CMatrix> {
    if phases.len() != triple.len() {
        return Err(Error::SizeMismatch(phases.len(), triple.len()));
    }
    let defect = intertwining_defect(u, triple);
    if defect > lift_tol {
        return Err(Error::NotIntertwining(defect));
    }
    let dim = u.nrows();
    let mut out = matrix::zeros(dim);
    for i in 0..triple.len() {
        let p = triple.p_projection(i);
        let q = triple.q_projection(triple.sigma.apply(i));
        let term = q.dot(u).dot(&p);
        out = out + term.mapv(|v| v * phases.0[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis(dim: usize, k: usize) -> CVector {
        let mut v: CVector = Array1::zeros(dim);
        v[k] = c(1.0, 0.0);
        v
    }

    #[test]
    fn rank1_distance_examples() {
        let e1 = basis(2, 0);
        let e2 = basis(2, 1);
        assert_eq!(rank1_distance(&e1, &e1), 0.0);
        assert_eq!(rank1_distance(&e1, &e2), 1.0);
        let theta = std::f64::consts::PI / 6.0;
        let w: CVector = ndarray::array![c(theta.cos(), 0.0), c(theta.sin(), 0.0)];
        assert!((rank1_distance(&e1, &w) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_triples_have_distance_zero() {
        let t = ProjectionTriple::new(
            vec![basis(3, 0), basis(3, 1)],
            vec![basis(3, 1), basis(3, 2)],
            Permutation::identity(2),
        )
        .unwrap();
        let m = bottleneck_distance(&t, &t).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.tau.is_identity());
        assert!(m.certified_unique);
    }

    #[test]
    fn sigma_transposition_forces_value_one() {
        // same families, sigma differs by a transposition of orthogonal lines
        let p = vec![basis(2, 0), basis(2, 1)];
        let q = vec![basis(2, 0), basis(2, 1)];
        let a = ProjectionTriple::new(p.clone(), q.clone(), Permutation::identity(2)).unwrap();
        let b = ProjectionTriple::new(p, q, Permutation::from_map(vec![1, 0]).unwrap()).unwrap();
        let m = bottleneck_distance(&a, &b).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(!m.certified_unique);
    }

    #[test]
    fn transport_examples() {
        let e1 = basis(2, 0);
        let same = transport_projection(&e1, &e1, &e1).unwrap();
        assert!((same[0] - c(1.0, 0.0)).norm() < 1e-15);

        let theta = std::f64::consts::PI / 6.0;
        let w: CVector = ndarray::array![c(theta.cos(), 0.0), c(theta.sin(), 0.0)];
        let moved = transport_projection(&e1, &w, &e1).unwrap();
        // lands in span(w), nonzero
        let p_moved = matrix::rank_one(&w).dot(&moved);
        let diff: f64 = (0..2)
            .map(|i| (p_moved[i] - moved[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12);
        assert!(matrix::vec_norm(&moved) > 0.5);
        assert!((moved[0] - c(theta.cos() * theta.cos(), 0.0)).norm() < 1e-12);
        assert!((moved[1] - c(theta.sin() * theta.cos(), 0.0)).norm() < 1e-12);

        let e2 = basis(2, 1);
        assert!(matches!(
            transport_projection(&e1, &e2, &e1),
            Err(Error::TooFar(_))
        ));
    }

    #[test]
    fn match_stability_examples() {
        // reference and two nearby triples: the realized pairings differ by
        // at most the mutual distance
        let th = 0.1_f64;
        let rot = |angle: f64| -> Vec<CVector> {
            vec![
                ndarray::array![c(angle.cos(), 0.0), c(angle.sin(), 0.0), c(0.0, 0.0)],
                ndarray::array![c(-angle.sin(), 0.0), c(angle.cos(), 0.0), c(0.0, 0.0)],
            ]
        };
        let make = |angle: f64| {
            ProjectionTriple::new(rot(angle), rot(angle + 0.3), Permutation::identity(2)).unwrap()
        };
        let reference = make(0.0);
        let a = make(th);
        let b = make(-th);
        // a = b gives zero
        assert_eq!(match_stability(&reference, &a, &a).unwrap(), 0.0);
        // a = ref reduces to the pairing gap of b against ref
        let d_ref_b = bottleneck_distance(&reference, &b).unwrap().value;
        let s = match_stability(&reference, &reference, &b).unwrap();
        assert!((s - d_ref_b).abs() < 1e-12);
        // and in general the value is controlled by d(a, b)
        let d_ab = bottleneck_distance(&a, &b).unwrap().value;
        let s = match_stability(&reference, &a, &b).unwrap();
        assert!(s <= d_ab + 1e-10);

        // far triples refuse
        let far = make(1.2);
        assert!(matches!(
            match_stability(&reference, &far, &b),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn gauge_on_exact_chart_center() {
        // u maps each p-line to its sigma-partner q-line with phase 1
        let p = vec![basis(2, 0), basis(2, 1)];
        let q = vec![basis(2, 0), basis(2, 1)];
        let t = ProjectionTriple::new(p, q, Permutation::identity(2)).unwrap();
        let u = matrix::identity(2);
        let z = extract_phases(&t, &t, &u, 1e-7).unwrap();
        for zi in &z.0 {
            assert!((zi - c(1.0, 0.0)).norm() < 1e-12);
        }
        // flipping the first phase flips only the first column
        let flipped =
            apply_gauge(&u, &GaugePhases(vec![c(-1.0, 0.0), c(1.0, 0.0)]), &t, 1e-7).unwrap();
        assert!((flipped[[0, 0]] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((flipped[[1, 1]] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gauge_twice_with_conjugate_restores() {
        let p = vec![basis(3, 0), basis(3, 1)];
        let q = vec![basis(3, 2), basis(3, 0)];
        let t = ProjectionTriple::new(p, q, Permutation::from_map(vec![1, 0]).unwrap()).unwrap();
        // u: p_0 -> q_{sigma(0)} = q_1 = e0, p_1 -> q_0 = e2
        let mut u = matrix::zeros(3);
        u[[0, 0]] = c(1.0, 0.0);
        u[[2, 1]] = c(1.0, 0.0);
        u[[1, 2]] = c(1.0, 0.0);
        let z = GaugePhases(vec![C64::from_polar(1.0, 0.7), C64::from_polar(1.0, -1.3)]);
        let zbar = GaugePhases(z.0.iter().map(|v| v.conj()).collect());
        let once = apply_gauge(&u, &z, &t, 1e-7).unwrap();
        let twice = apply_gauge(&once, &zbar, &t, 1e-7).unwrap();
        // restores the projection of u onto the chart (here u itself on the lines)
        for i in 0..2 {
            let p = t.p_projection(i);
            let d = (&twice.dot(&p)) - (&u.dot(&p));
            assert!(matrix::op_norm(&d) < 1e-12);
        }
    }
}
