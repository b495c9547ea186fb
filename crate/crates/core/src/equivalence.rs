//! Constructive equivalence certificates.
//!
//! Two loops with pointwise equal retained spectra induce, per grid point, a
//! projection triple pairing their eigenframes. Walking the loop transports
//! an intertwining partial isometry along the triples; the closure defect is
//! a diagonal gauge whose phases are unwound linearly in arc length, giving
//! an exactly closed intertwiner loop. Compressing the loop to a feasible
//! corner rank and dilating the corner to a unitary block yields an
//! identity-plus-finite-block unitary family conjugating the first loop to
//! within 37/n of the second.

use crate::braid::{diagonalize_path, frame_transport, trace_braid, EigenBraid};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::finite_rank::{assemble_approximant, build_lambda_prime, select_plan, AssemblyReport};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::path::OperatorPath;
use crate::perm::Permutation;
use crate::spectral::{eigen_frame, psd_sqrt, SpectralFrame};
use crate::triples::{bottleneck_distance, transport_projection, ProjectionTriple};
use serde::Serialize;

pub const EQUIVALENCE_BOUND_NUMERATOR: f64 = 37.0;

/// Per-grid-point projection triples pairing two eigenframe families, with
/// the certified consecutive matchings.
#[derive(Debug)]
pub struct TriplePath {
    pub triples: Vec<ProjectionTriple>,
    /// Matching from triple g to triple g+1.
    pub taus: Vec<Permutation>,
    pub distances: Vec<f64>,
    pub rank: usize,
    pub is_loop: bool,
}

fn frame_triple(
    a: &SpectralFrame,
    b: &SpectralFrame,
    g: usize,
    scale: f64,
) -> Result<ProjectionTriple> {
    if a.len() != b.len() {
        return Err(Error::SpectraMismatch {
            g,
            detail: format!("retained counts differ: {} vs {}", a.len(), b.len()),
        });
    }
    // both frames are sorted by value, so labels pair positionally
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        if (x - y).norm() > 1e-7 * scale {
            return Err(Error::SpectraMismatch {
                g,
                detail: format!("retained values differ: {x} vs {y}"),
            });
        }
    }
    let p_vecs: Vec<CVector> = (0..a.len()).map(|k| a.vector(k)).collect();
    let q_vecs: Vec<CVector> = (0..b.len()).map(|k| b.vector(k)).collect();
    let mut t = ProjectionTriple::new(p_vecs, q_vecs, Permutation::identity(a.len()))?;
    t.labels = Some(a.values.clone());
    Ok(t)
}

/// Build the triple path of two spectra-matched paths, checking the chart
/// condition on every step.
pub fn build_phi(
    a: &OperatorPath,
    b: &OperatorPath,
    threshold: f64,
    tol: &Tolerances,
) -> Result<TriplePath> {
    if a.grid != b.grid {
        return Err(Error::DimMismatch(
            "paths live on different grids".to_string(),
        ));
    }
    let scale = a.max_norm().max(b.max_norm()).max(1.0);
    let mut triples = Vec::with_capacity(a.grid + 1);
    for g in 0..=a.grid {
        let fa = eigen_frame(&a.samples[g], g, threshold, tol)?;
        let fb = eigen_frame(&b.samples[g], g, threshold, tol)?;
        triples.push(frame_triple(&fa, &fb, g, scale)?);
    }
    let rank = triples[0].len();
    if triples.iter().any(|t| t.len() != rank) {
        return Err(Error::SpectraMismatch {
            g: 0,
            detail: "retained count varies along the path".to_string(),
        });
    }
    let mut taus = Vec::with_capacity(a.grid);
    let mut distances = Vec::with_capacity(a.grid);
    for g in 0..a.grid {
        let m = bottleneck_distance(&triples[g], &triples[g + 1])?;
        if m.value >= 0.25 {
            return Err(Error::ChartTooCoarse {
                step: g,
                dist: m.value,
            });
        }
        taus.push(m.tau);
        distances.push(m.value);
    }
    Ok(TriplePath {
        triples,
        taus,
        distances,
        rank,
        is_loop: a.is_loop && b.is_loop,
    })
}

/// A grid-sampled partial-isometry family intertwining the two frame
/// families of a [`TriplePath`].
#[derive(Debug)]
pub struct LiftedLoop {
    pub samples: Vec<CMatrix>,
    pub rank: usize,
    /// Worst intertwining defect across lines and grid points.
    pub intertwining_defect: f64,
    /// Endpoint gap after phase redistribution.
    pub closure_gap: f64,
}

struct TransportState {
    /// `positions[i0]` = current triple index of the line that started at i0.
    positions: Vec<usize>,
    a_vecs: Vec<CVector>,
    b_vecs: Vec<CVector>,
}

fn transport_step(
    state: &mut TransportState,
    from: &ProjectionTriple,
    to: &ProjectionTriple,
    tau: &Permutation,
) -> Result<()> {
    for i0 in 0..state.positions.len() {
        let cur = state.positions[i0];
        let nxt = tau.apply(cur);
        let a_new = matrix::normalize(&transport_projection(
            &from.p_vecs[cur],
            &to.p_vecs[nxt],
            &state.a_vecs[i0],
        )?);
        let b_new = matrix::normalize(&transport_projection(
            &from.q_vecs[from.sigma.apply(cur)],
            &to.q_vecs[to.sigma.apply(nxt)],
            &state.b_vecs[i0],
        )?);
        state.positions[i0] = nxt;
        state.a_vecs[i0] = a_new;
        state.b_vecs[i0] = b_new;
    }
    Ok(())
}

fn rank_one_sum(bs: &[CVector], as_: &[CVector]) -> CMatrix {
    let dim = bs[0].len();
    let mut w = matrix::zeros(dim);
    for (b, a) in bs.iter().zip(as_.iter()) {
        for r in 0..dim {
            for c in 0..dim {
                w[[r, c]] += b[r] * a[c].conj();
            }
        }
    }
    w
}

fn lift_defect(w: &CMatrix, t: &ProjectionTriple) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..t.len() {
        let p = t.p_projection(i);
        let q = t.q_projection(t.sigma.apply(i));
        let lhs = w.dot(&p).dot(&matrix::adjoint(w));
        worst = worst.max(matrix::op_norm(&(&lhs - &q)));
    }
    worst
}

/// Lift a loop of triples to an exactly closed intertwining isometry loop.
///
/// The initial isometry maps each p-line onto its sigma-partner q-line via
/// the stored frame vectors; both frames are then transported step by step.
/// At closure the mismatch against the initial isometry is a diagonal gauge;
/// its phases are spread linearly along the loop and removed.
pub fn lift_loop(phi: &TriplePath, tol: &Tolerances) -> Result<LiftedLoop> {
    if !phi.is_loop {
        return Err(Error::NotALoop(f64::NAN));
    }
    let grid = phi.taus.len();
    let s = phi.rank;
    let t0 = &phi.triples[0];
    let mut state = TransportState {
        positions: (0..s).collect(),
        a_vecs: (0..s).map(|i| t0.p_vecs[i].clone()).collect(),
        b_vecs: (0..s)
            .map(|i| t0.q_vecs[t0.sigma.apply(i)].clone())
            .collect(),
    };
    let mut raw: Vec<CMatrix> = Vec::with_capacity(grid + 1);
    let mut line_positions: Vec<Vec<usize>> = vec![state.positions.clone()];
    raw.push(rank_one_sum(&state.b_vecs, &state.a_vecs));
    for g in 0..grid {
        transport_step(
            &mut state,
            &phi.triples[g],
            &phi.triples[g + 1],
            &phi.taus[g],
        )?;
        raw.push(rank_one_sum(&state.b_vecs, &state.a_vecs));
        line_positions.push(state.positions.clone());
    }

    // close up: match the final triple back onto the initial one
    let closing = bottleneck_distance(&phi.triples[grid], &phi.triples[0])?;
    if closing.value >= 0.25 {
        return Err(Error::ChartTooCoarse {
            step: grid,
            dist: closing.value,
        });
    }
    // the line that started at i0 lands on line `land[i0]` of the initial triple
    let land: Vec<usize> = (0..s)
        .map(|i0| closing.tau.apply(state.positions[i0]))
        .collect();
    let w_end = &raw[grid];
    let mut phases = vec![C64::new(0.0, 0.0); s];
    for i0 in 0..s {
        let l = land[i0];
        let u = &t0.p_vecs[l];
        let wu = w_end.dot(u);
        let z = matrix::inner(&t0.q_vecs[t0.sigma.apply(l)], &wu);
        if (z.norm() - 1.0).abs() > 1e-4 {
            return Err(Error::ClosureDefectNotDiagonal(format!(
                "line {l} closes with coefficient modulus {:.6}",
                z.norm()
            )));
        }
        phases[i0] = z / z.norm();
    }

    // unwind each line's phase linearly in arc length
    let mut samples = Vec::with_capacity(grid + 1);
    for (g, w) in raw.iter().enumerate() {
        let t = g as f64 / grid as f64;
        let tri = &phi.triples[g];
        let mut corr = matrix::zeros(w.nrows());
        for i0 in 0..s {
            let theta = phases[i0].arg() * t;
            let twist = C64::from_polar(1.0, -theta);
            let p = tri.p_projection(line_positions[g][i0]);
            corr = corr + p.mapv(|v| v * twist);
        }
        // keep the co-kernel of the isometry untouched
        let mut outside = matrix::identity(w.nrows());
        for i0 in 0..s {
            outside = outside - tri.p_projection(line_positions[g][i0]);
        }
        samples.push(w.dot(&(corr + outside)));
    }

    let closure_gap = matrix::op_norm(&(&samples[grid] - &samples[0]));
    if closure_gap <= 1e-6 {
        // the redistribution closes the loop up to numerical dust; snap the
        // endpoint so downstream corners and dilations close bit-exactly
        samples[grid] = samples[0].clone();
    }
    let mut defect = 0.0_f64;
    for (g, w) in samples.iter().enumerate() {
        defect = defect.max(lift_defect(w, &phi.triples[g]));
        // W*W must be the retained projection of the source frame
        let gram = matrix::adjoint(w).dot(w);
        let p_s = phi.triples[g]
            .p_vecs
            .iter()
            .fold(matrix::zeros(w.nrows()), |acc, v| acc + matrix::rank_one(v));
        defect = defect.max(matrix::op_norm(&(&gram - &p_s)));
    }
    if defect > tol.lift.max(1e-6) {
        return Err(Error::NotIntertwining(defect));
    }
    if closure_gap > 1e-6 {
        return Err(Error::ClosureDefectNotDiagonal(format!(
            "loop fails to close after redistribution: gap {closure_gap:.3e}"
        )));
    }
    Ok(LiftedLoop {
        samples,
        rank: s,
        intertwining_defect: defect,
        closure_gap,
    })
}

/// Pointwise unitary lift over a contractible parameter interval: transport
/// without closure correction, completed to a unitary on the complement of
/// the retained subspaces.
#[derive(Debug)]
pub struct StrongLift {
    pub unitaries: Vec<CMatrix>,
    /// Per-grid-point conjugation residual against the target path.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn strong_lift_path(
    a: &OperatorPath,
    b: &OperatorPath,
    threshold: f64,
    tol: &Tolerances,
) -> Result<StrongLift> {
    let phi = build_phi(a, b, threshold, tol)?;
    let grid = phi.taus.len();
    let s = phi.rank;
    let t0 = &phi.triples[0];
    let mut state = TransportState {
        positions: (0..s).collect(),
        a_vecs: (0..s).map(|i| t0.p_vecs[i].clone()).collect(),
        b_vecs: (0..s)
            .map(|i| t0.q_vecs[t0.sigma.apply(i)].clone())
            .collect(),
    };
    let dim = a.dim();
    let mut unitaries = Vec::with_capacity(grid + 1);
    let mut residuals = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        if g > 0 {
            transport_step(
                &mut state,
                &phi.triples[g - 1],
                &phi.triples[g],
                &phi.taus[g - 1],
            )?;
        }
        let w = rank_one_sum(&state.b_vecs, &state.a_vecs);
        let u = if s == dim {
            w
        } else {
            // deterministic unitary completion on the orthogonal complements
            let mut a_basis = CMatrix::zeros((dim, s));
            let mut b_basis = CMatrix::zeros((dim, s));
            for i0 in 0..s {
                a_basis.column_mut(i0).assign(&state.a_vecs[i0]);
                b_basis.column_mut(i0).assign(&state.b_vecs[i0]);
            }
            let ua = matrix::complete_unitary(&a_basis)?;
            let ub = matrix::complete_unitary(&b_basis)?;
            ub.dot(&matrix::adjoint(&ua))
        };
        let conj = u.dot(a.matrix(g)).dot(&matrix::adjoint(&u));
        residuals.push(matrix::op_norm(&(&conj - b.matrix(g))));
        unitaries.push(u);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(StrongLift {
        unitaries,
        residuals,
        max_residual,
    })
}

/// Outcome of the truncation-rank search.
#[derive(Debug, Clone, Copy)]
pub struct TruncationChoice {
    pub m: usize,
    /// Worst margin by which the six compression inequalities hold.
    pub slack: f64,
}

fn compression_slack(
    w: &CMatrix,
    a: &CMatrix,
    b: &CMatrix,
    m: usize,
    inv_norm_target: f64,
    n: u32,
    tol: &Tolerances,
) -> Result<f64> {
    let cut = 1.0 / n as f64;
    let x = matrix::compress(w, m);
    let xa = matrix::adjoint(&x);
    let pa = matrix::compress(a, m);
    let pb = matrix::compress(b, m);

    let mut slack = f64::INFINITY;
    let e1 = matrix::op_norm(&(&x.dot(a).dot(&xa) - &pb));
    slack = slack.min(cut - e1);
    let e2 = matrix::op_norm(&(&pa - a));
    slack = slack.min(cut - e2);
    let e3 = matrix::op_norm(&(&pb - b));
    slack = slack.min(cut - e3);

    let gram = matrix::corner(&xa.dot(&x), m);
    let defect = matrix::identity(m) - &gram;
    let root = psd_sqrt(&defect, tol)?;
    let e4 = matrix::op_norm(&(&defect - &root));
    slack = slack.min(inv_norm_target - e4);

    let xax = x.dot(a).dot(&xa).dot(&x);
    let e5 = matrix::op_norm(&(&x.dot(&pa) - &xax));
    slack = slack.min(cut - e5);
    let e6 = matrix::op_norm(&(&pa.dot(&xa) - &xa.dot(&x).dot(a).dot(&xa)));
    slack = slack.min(cut - e6);
    Ok(slack)
}

/// Smallest corner rank m such that the six compression inequalities hold at
/// every grid point with targets 1/n and 1/(n(||A|| + ||B||)): doubling
/// search for a feasible rank, then a decrementing walk to the smallest.
pub fn choose_truncation(
    w: &LiftedLoop,
    an: &OperatorPath,
    bn: &OperatorPath,
    n: u32,
    norm_a: f64,
    norm_b: f64,
    tol: &Tolerances,
) -> Result<TruncationChoice> {
    let dim = an.dim();
    let inv_norm_target = 1.0 / (n as f64 * (norm_a + norm_b));
    let feasible = |m: usize| -> Result<Option<f64>> {
        let mut worst = f64::INFINITY;
        for g in 0..=an.grid {
            let s = compression_slack(
                &w.samples[g],
                an.matrix(g),
                bn.matrix(g),
                m,
                inv_norm_target,
                n,
                tol,
            )?;
            worst = worst.min(s);
            if worst <= 0.0 {
                return Ok(None);
            }
        }
        Ok(Some(worst))
    };

    let mut m = 1usize;
    let mut found: Option<(usize, f64)> = None;
    loop {
        let m_try = m.min(dim);
        if let Some(slack) = feasible(m_try)? {
            found = Some((m_try, slack));
            break;
        }
        if m_try == dim {
            break;
        }
        m *= 2;
    }
    let (mut best_m, mut best_slack) = match found {
        Some(f) => f,
        None => return Err(Error::NoFeasibleM(dim)),
    };
    while best_m > 1 {
        match feasible(best_m - 1)? {
            Some(slack) => {
                best_m -= 1;
                best_slack = slack;
            }
            None => break,
        }
    }
    Ok(TruncationChoice {
        m: best_m,
        slack: best_slack,
    })
}

/// Dilate a contraction to a unitary of doubled size using its defect
/// square roots `(I - U'U'*)^{1/2}` and `(I - U'*U')^{1/2}`.
///
/// Both roots are formed from one singular value decomposition of the
/// block, so the off-diagonal cancellation holds to machine precision even
/// when singular values sit on 1.
pub fn block_dilation(u_prime: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    use ndarray_linalg::SVD;
    let m = matrix::require_square(u_prime)?;
    let (left, sing, right) = u_prime
        .svd(true, true)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let left = left.expect("requested");
    let right = right.expect("requested");
    let max_sv = sing.iter().copied().fold(0.0_f64, f64::max);
    if max_sv > 1.0 + 1e-8 {
        return Err(Error::NotAContraction(max_sv));
    }
    let cos: Vec<C64> = sing
        .iter()
        .map(|s| C64::new((1.0 - (s.min(1.0)) * s.min(1.0)).max(0.0).sqrt(), 0.0))
        .collect();
    let c = matrix::from_diag(&cos);
    let d_r = left.dot(&c).dot(&matrix::adjoint(&left));
    let d_l = matrix::adjoint(&right).dot(&c).dot(&right);
    let up_star = matrix::adjoint(u_prime);
    let mut u = matrix::zeros(2 * m);
    for i in 0..m {
        for j in 0..m {
            u[[i, j]] = u_prime[[i, j]];
            u[[i, j + m]] = d_r[[i, j]];
            u[[i + m, j]] = -d_l[[i, j]];
            u[[i + m, j + m]] = up_star[[i, j]];
        }
    }
    let defect = matrix::unitarity_defect(&u);
    if defect > 10.0 * tol.norm_scale(1.0).max(1e-9) {
        return Err(Error::Linalg(format!(
            "dilated block fails unitarity: defect {defect:.3e}"
        )));
    }
    Ok(u)
}

/// Identity-plus-finite-block unitary loop with its certificate data.
#[derive(Debug)]
pub struct IntertwinerPath {
    pub samples: Vec<CMatrix>,
    pub block_rank: usize,
    pub bound_achieved: f64,
    pub target: f64,
}

/// End-to-end certificate for one equivalence run.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub n: u32,
    pub s_n: usize,
    pub m_n: usize,
    pub grid: usize,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub target: f64,
    pub success: bool,
    pub approximation_deviation_a: f64,
    pub approximation_deviation_b: f64,
    pub lift_defect: f64,
    pub truncation_slack: f64,
}

/// Assemble the final unitary family and measure it against the original
/// paths. The ambient dimension grows to fit the dilated block; the paths
/// are padded with zeros, which is exactly their declared-window meaning.
pub fn assemble_intertwiner(
    w: &LiftedLoop,
    m: usize,
    a: &OperatorPath,
    b: &OperatorPath,
    n: u32,
    tol: &Tolerances,
) -> Result<(IntertwinerPath, Vec<f64>)> {
    let dim = a.dim();
    let ambient = dim.max(2 * m);
    let target = EQUIVALENCE_BOUND_NUMERATOR / n as f64;
    let mut samples = Vec::with_capacity(a.grid + 1);
    let mut residuals = Vec::with_capacity(a.grid + 1);
    for g in 0..=a.grid {
        let u_prime = matrix::corner(&w.samples[g], m);
        let block = block_dilation(&u_prime, tol)?;
        let u = matrix::embed(&block, ambient, C64::new(1.0, 0.0));
        let defect = matrix::unitarity_defect(&u);
        if defect > 1e-9 {
            return Err(Error::Linalg(format!(
                "assembled unitary defect {defect:.3e} at grid point {g}"
            )));
        }
        let a_pad = matrix::embed(a.matrix(g), ambient, C64::new(0.0, 0.0));
        let b_pad = matrix::embed(b.matrix(g), ambient, C64::new(0.0, 0.0));
        let conj = u.dot(&a_pad).dot(&matrix::adjoint(&u));
        residuals.push(matrix::op_norm(&(&conj - &b_pad)));
        samples.push(u);
    }
    let closure = matrix::op_norm(&(&samples[a.grid] - &samples[0]));
    if closure > 1e-9 {
        return Err(Error::ClosureDefectNotDiagonal(format!(
            "intertwiner loop gap {closure:.3e}"
        )));
    }
    let bound_achieved = residuals.iter().copied().fold(0.0, f64::max);
    if bound_achieved >= target {
        return Err(Error::BoundViolated {
            measured: bound_achieved,
            target,
        });
    }
    Ok((
        IntertwinerPath {
            samples,
            block_rank: 2 * m,
            bound_achieved,
            target,
        },
        residuals,
    ))
}

/// All artifacts of one full certification run.
pub struct EquivalenceRun {
    pub report: EquivalenceReport,
    pub intertwiner: IntertwinerPath,
    pub approximant_a: OperatorPath,
    pub approximant_b: OperatorPath,
    pub lift: LiftedLoop,
}

fn align_second_braid(reference: &EigenBraid, other: &EigenBraid) -> Result<()> {
    if reference.tracks.len() != other.tracks.len() {
        return Err(Error::SpectraMismatch {
            g: 0,
            detail: format!(
                "track counts differ: {} vs {}",
                reference.tracks.len(),
                other.tracks.len()
            ),
        });
    }
    let scale = reference
        .tracks
        .iter()
        .map(|t| t.max_modulus())
        .fold(1.0, f64::max);
    for (i, (ta, tb)) in reference.tracks.iter().zip(other.tracks.iter()).enumerate() {
        for (va, vb) in ta.values.iter().zip(tb.values.iter()) {
            if (va - vb).norm() > 1e-7 * scale {
                return Err(Error::SpectraMismatch {
                    g: 0,
                    detail: format!("track {i} values diverge: {va} vs {vb}"),
                });
            }
        }
    }
    Ok(())
}

/// Full pipeline: braid both loops, build matched rank-s(n) approximants,
/// lift the triple loop, choose the corner rank, dilate, and certify
/// `||U A U* - B|| < 37/n` against the original paths.
pub fn certify_equivalence(
    a: &OperatorPath,
    b: &OperatorPath,
    n: u32,
    threshold: f64,
    tol: &Tolerances,
) -> Result<EquivalenceRun> {
    let braid_a = trace_braid(a, threshold, tol)?;
    let braid_b = trace_braid(b, threshold, tol)?;
    if !braid_a.full_tracks() || !braid_b.full_tracks() {
        return Err(Error::Condition1Missing);
    }
    align_second_braid(&braid_a, &braid_b)?;

    let framed_a = frame_transport(a, braid_a)?;
    let framed_b = frame_transport(b, braid_b)?;
    let diag_a = diagonalize_path(a, &framed_a)?;
    let diag_b = diagonalize_path(b, &framed_b)?;

    let mut plan = select_plan(&framed_a.braid, n)?;
    build_lambda_prime(&framed_a.braid, &mut plan)?;
    let (an, rep_a): (OperatorPath, AssemblyReport) = assemble_approximant(a, &diag_a, &plan, tol)?;
    let (bn, rep_b) = assemble_approximant(b, &diag_b, &plan, tol)?;

    // retained values of the approximants never dip below half the smallest
    // modified modulus, which separates them cleanly from the zero block
    let min_mod = plan
        .lambda_prime
        .iter()
        .flat_map(|t| t.iter().map(|v| v.norm()))
        .fold(f64::INFINITY, f64::min);
    let phi_threshold = min_mod / 2.0;

    let phi = build_phi(&an, &bn, phi_threshold, tol)?;
    let lift = lift_loop(&phi, tol)?;
    let choice = choose_truncation(&lift, &an, &bn, n, a.max_norm(), b.max_norm(), tol)?;
    let (intertwiner, residuals) = assemble_intertwiner(&lift, choice.m, a, b, n, tol)?;

    let max_residual = intertwiner.bound_achieved;
    let report = EquivalenceReport {
        n,
        s_n: plan.s_count(),
        m_n: choice.m,
        grid: a.grid,
        max_residual,
        residuals,
        target: intertwiner.target,
        success: max_residual < intertwiner.target,
        approximation_deviation_a: rep_a.max_deviation,
        approximation_deviation_b: rep_b.max_deviation,
        lift_defect: lift.intertwining_defect,
        truncation_slack: choice.slack,
    };
    Ok(EquivalenceRun {
        report,
        intertwiner,
        approximant_a: an,
        approximant_b: bn,
        lift,
    })
}
