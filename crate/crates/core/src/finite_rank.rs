//! Finite-rank loop approximants.
//!
//! Given a loop braid with monodromy sigma, pick the tracks that ever reach
//! modulus 1/n, correct sigma into a permutation sigma' of that index set,
//! bend the leaving tracks onto their sigma'-partners over the final
//! parameter stretch, and reassemble a rank-s(n) loop within 4/n of the
//! original (plus the declared tail).

use std::f64::consts::PI;

use crate::braid::{DiagonalizedPath, EigenBraid};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64};
use crate::path::OperatorPath;
use crate::perm::Permutation;

pub const APPROXIMATION_BOUND_NUMERATOR: f64 = 4.0;

/// Everything needed to assemble the rank-s(n) approximant.
#[derive(Debug, Clone)]
pub struct ApproximationPlan {
    pub n: u32,
    /// Track ids whose maximal modulus reaches 1/n, ascending.
    pub s_set: Vec<usize>,
    /// Endpoint threshold sets: track ids with |value| >= 1/n at x = 0 / 1.
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
    /// Grid index from which every selected track stays within 1/n of its
    /// endpoint value.
    pub alpha_index: usize,
    /// Loop monodromy on all tracks.
    pub sigma: Permutation,
    /// Corrected permutation on `s_set` positions:
    /// track `s_set[k]` pairs with track `s_set[sigma_prime(k)]`.
    pub sigma_prime: Permutation,
    /// Rotation pairs (source track in s_set, target track outside s_set)
    /// the isometry ramp must carry.
    pub moved_pairs: Vec<(usize, usize)>,
    /// Modified eigenvalue samples: `lambda_prime[k][g]` for s_set position k.
    pub lambda_prime: Vec<Vec<C64>>,
    pub grid: usize,
}

impl ApproximationPlan {
    pub fn s_count(&self) -> usize {
        self.s_set.len()
    }

    /// Index span of the isometry support: s_set plus the rotation targets.
    pub fn l_set(&self) -> Vec<usize> {
        let mut l = self.s_set.clone();
        for &(_, b) in &self.moved_pairs {
            if !l.contains(&b) {
                l.push(b);
            }
        }
        l.sort_unstable();
        l
    }
}

/// Select the index set, the hand-off point, and the corrected permutation.
pub fn select_plan(braid: &EigenBraid, n: u32) -> Result<ApproximationPlan> {
    if !braid.is_loop {
        return Err(Error::NotALoop(f64::NAN));
    }
    if !braid.full_tracks() {
        return Err(Error::Condition1Missing);
    }
    let sigma = crate::braid::monodromy(braid)?;
    let cut = 1.0 / n as f64;
    let s_set: Vec<usize> = (0..braid.tracks.len())
        .filter(|&t| braid.tracks[t].max_modulus() >= cut)
        .collect();
    if s_set.is_empty() {
        return Err(Error::EmptySn(n));
    }
    let grid = braid.grid;
    let s0: Vec<usize> = (0..braid.tracks.len())
        .filter(|&t| braid.tracks[t].values[0].norm() >= cut)
        .collect();
    let s1: Vec<usize> = (0..braid.tracks.len())
        .filter(|&t| braid.tracks[t].values[grid].norm() >= cut)
        .collect();

    // largest suffix [alpha, G] on which every selected track stays within
    // 1/n of its endpoint value
    let mut alpha_index = 0usize;
    for g in (0..=grid).rev() {
        let ok = s_set
            .iter()
            .all(|&t| (braid.tracks[t].values[g] - braid.tracks[t].values[grid]).norm() < cut);
        if !ok {
            alpha_index = g + 1;
            break;
        }
    }

    // sigma' agrees with sigma where sigma stays inside the set, and maps
    // the leavers onto the unreached elements in ascending order
    let in_s = |t: usize| s_set.binary_search(&t).is_ok();
    let pos = |t: usize| s_set.binary_search(&t).expect("member of s_set");
    let mut prime = vec![usize::MAX; s_set.len()];
    let mut leavers = Vec::new();
    let mut reached = vec![false; s_set.len()];
    for &i in &s_set {
        let si = sigma.apply(i);
        if in_s(si) {
            prime[pos(i)] = pos(si);
            reached[pos(si)] = true;
        } else {
            leavers.push(i);
        }
    }
    let unreached: Vec<usize> = s_set
        .iter()
        .enumerate()
        .filter(|(k, _)| !reached[*k])
        .map(|(k, _)| k)
        .collect();
    if leavers.len() != unreached.len() {
        return Err(Error::PreconditionViolated(
            "corrected permutation does not balance".to_string(),
        ));
    }
    let mut moved_pairs = Vec::with_capacity(leavers.len());
    for (&i, &target_pos) in leavers.iter().zip(unreached.iter()) {
        prime[pos(i)] = target_pos;
        moved_pairs.push((s_set[target_pos], sigma.apply(i)));
    }
    let sigma_prime = Permutation::from_map(prime)?;

    if alpha_index == grid && !moved_pairs.is_empty() {
        return Err(Error::RefineGrid {
            step: grid,
            detail: "no room for the hand-off interval; refine the grid".to_string(),
        });
    }

    Ok(ApproximationPlan {
        n,
        s_set,
        s0,
        s1,
        alpha_index,
        sigma,
        sigma_prime,
        moved_pairs,
        lambda_prime: Vec::new(),
        grid,
    })
}

fn log_polar_interp(from: C64, to: C64, t: f64) -> C64 {
    let m0 = from.norm();
    let m1 = to.norm();
    let a0 = from.arg();
    let mut da = to.arg() - a0;
    while da > PI {
        da -= 2.0 * PI;
    }
    while da <= -PI {
        da += 2.0 * PI;
    }
    C64::from_polar(m0 + t * (m1 - m0), a0 + t * da)
}

/// Fill in the modified eigenvalue samples.
///
/// Tracks whose monodromy image stays selected keep their values verbatim;
/// leavers follow their own values up to the hand-off point and then a
/// log-polar interpolant onto the start value of their sigma'-preimage, so
/// the endpoint chaining equation holds exactly. Collisions between modified
/// tracks are separated by minimal radial pushes within a 1/(10n) budget.
pub fn build_lambda_prime(braid: &EigenBraid, plan: &mut ApproximationPlan) -> Result<()> {
    let grid = plan.grid;
    let a = plan.alpha_index;
    let s = plan.s_count();
    let in_sigma_s: Vec<bool> = plan
        .s_set
        .iter()
        .map(|&i| {
            // i is in sigma(S_n) iff sigma^{-1}(i) is selected
            let pre = plan.sigma.inverse().apply(i);
            plan.s_set.binary_search(&pre).is_ok()
        })
        .collect();

    let mut lambda_prime = Vec::with_capacity(s);
    for k in 0..s {
        let ti = plan.s_set[k];
        let track = &braid.tracks[ti];
        if in_sigma_s[k] {
            lambda_prime.push(track.values.clone());
            continue;
        }
        // leaver: i in S_n \ sigma(S_n)
        let pre_pos = plan.sigma_prime.inverse().apply(k);
        let pre_track = plan.s_set[pre_pos];
        let target = braid.tracks[pre_track].values[0];
        let from = track.values[a];
        let mut vals = Vec::with_capacity(grid + 1);
        let bound = from.norm().max(target.norm()) + 1e-12;
        for (g, v) in track.values.iter().enumerate() {
            if g <= a {
                vals.push(*v);
            } else {
                let t = (g - a) as f64 / (grid - a) as f64;
                let f = log_polar_interp(from, target, t);
                if f.norm() > bound || f.norm() == 0.0 {
                    return Err(Error::PreconditionViolated(format!(
                        "interpolant violates the modulus bound at grid point {g}"
                    )));
                }
                vals.push(f);
            }
        }
        lambda_prime.push(vals);
    }

    // separate any collisions among the modified tracks; the floor sits
    // above the frame gap minimum so downstream frames stay multiplicity-free
    let budget = 1.0 / (10.0 * plan.n as f64);
    let min_gap = 1e-7;
    // endpoints are left alone: their values are frame eigenvalues, already
    // separated, and pushes there would break the chaining equation
    for g in 1..grid {
        for l in 1..s {
            let mut pushed = 0.0_f64;
            loop {
                let mut clash = false;
                for k in 0..l {
                    if (lambda_prime[k][g] - lambda_prime[l][g]).norm() < min_gap {
                        clash = true;
                        break;
                    }
                }
                if !clash {
                    break;
                }
                let v = lambda_prime[l][g];
                let dir = if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    C64::new(1.0, 0.0)
                };
                lambda_prime[l][g] = v + dir * C64::new(2.0 * min_gap, 0.0);
                pushed += 2.0 * min_gap;
                if pushed > budget {
                    return Err(Error::CannotSeparate(budget));
                }
            }
        }
    }

    // endpoint chaining: lambda'_i(0) = lambda'_{sigma'(i)}(1)
    for k in 0..s {
        let kp = plan.sigma_prime.apply(k);
        let lhs = lambda_prime[k][0];
        let rhs = lambda_prime[kp][grid];
        if (lhs - rhs).norm() > 1e-9 {
            return Err(Error::PreconditionViolated(format!(
                "endpoint chaining violated: {lhs} vs {rhs}"
            )));
        }
    }
    plan.lambda_prime = lambda_prime;
    Ok(())
}

/// A grid-sampled path of fixed-rank partial isometries.
#[derive(Debug)]
pub struct PartialIsometryPath {
    pub samples: Vec<CMatrix>,
    pub rank: usize,
}

impl PartialIsometryPath {
    /// Worst defect of `V*V` from being a projection of the stated rank.
    pub fn max_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for v in &self.samples {
            let g = matrix::adjoint(v).dot(v);
            worst = worst.max(matrix::op_norm(&(&g.dot(&g) - &g)));
            let tr: C64 = (0..g.nrows()).map(|i| g[[i, i]]).sum();
            worst = worst.max((tr.re - self.rank as f64).abs());
        }
        worst
    }
}

/// Build the isometry ramp in track coordinates (`dim` is the ambient
/// dimension; tracks occupy the leading coordinates).
///
/// Up to the hand-off point the isometry is the coordinate projection onto
/// the selected set; past it, each moved pair turns inside its own plane by
/// a linearly ramped angle, landing the leaving coordinate on its monodromy
/// target at x = 1. Selected coordinates that stay put are never touched.
pub fn build_isometry_path(plan: &ApproximationPlan, dim: usize) -> Result<PartialIsometryPath> {
    let grid = plan.grid;
    let a = plan.alpha_index;
    let mut p_h = matrix::zeros(dim);
    for &t in &plan.s_set {
        if t >= dim {
            return Err(Error::DimMismatch(format!(
                "track coordinate {t} exceeds ambient dimension {dim}"
            )));
        }
        p_h[[t, t]] = C64::new(1.0, 0.0);
    }
    let mut samples = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        if g <= a || plan.moved_pairs.is_empty() {
            samples.push(p_h.clone());
            continue;
        }
        let theta = (g - a) as f64 / (grid - a) as f64 * PI / 2.0;
        let (s, c) = theta.sin_cos();
        let mut rot = matrix::identity(dim);
        for &(from, to) in &plan.moved_pairs {
            rot[[from, from]] = C64::new(c, 0.0);
            rot[[to, from]] = C64::new(s, 0.0);
            rot[[from, to]] = C64::new(-s, 0.0);
            rot[[to, to]] = C64::new(c, 0.0);
        }
        samples.push(rot.dot(&p_h));
    }
    Ok(PartialIsometryPath {
        samples,
        rank: plan.s_count(),
    })
}

/// Assembly certificate for one approximant.
#[derive(Debug, Clone)]
pub struct AssemblyReport {
    pub max_deviation: f64,
    pub deviation_target: f64,
    pub closure_gap: f64,
    pub spectrum_defect: f64,
}

/// Assemble the approximant loop from the diagonalizing family, the ramped
/// isometry, and the modified diagonal, then certify the deviation bound,
/// the exact closure, and the retained spectrum.
pub fn assemble_approximant(
    path: &OperatorPath,
    diag: &DiagonalizedPath,
    plan: &ApproximationPlan,
    tol: &Tolerances,
) -> Result<(OperatorPath, AssemblyReport)> {
    if plan.lambda_prime.is_empty() {
        return Err(Error::PreconditionViolated(
            "plan has no modified eigenvalues; run build_lambda_prime first".to_string(),
        ));
    }
    let grid = plan.grid;
    let dim = path.dim();
    let isometry = build_isometry_path(plan, dim)?;
    let iso_defect = isometry.max_defect();
    if iso_defect > 1e-9 {
        return Err(Error::PreconditionViolated(format!(
            "isometry ramp defect {iso_defect:.3e}"
        )));
    }

    let mut mats = Vec::with_capacity(grid + 1);
    let mut max_dev = 0.0_f64;
    for g in 0..=grid {
        let mut lam = vec![C64::new(0.0, 0.0); dim];
        for (k, &t) in plan.s_set.iter().enumerate() {
            lam[t] = plan.lambda_prime[k][g];
        }
        let v = &isometry.samples[g];
        let core = v.dot(&matrix::from_diag(&lam)).dot(&matrix::adjoint(v));
        let u = &diag.unitaries[g];
        let an = u.dot(&core).dot(&matrix::adjoint(u));
        max_dev = max_dev.max(matrix::op_norm(&(&an - path.matrix(g))));
        mats.push(an);
    }

    let closure_gap = matrix::op_norm(&(&mats[grid] - &mats[0]));
    let scale = path.max_norm().max(1.0);
    if closure_gap > tol.norm_scale(scale).max(1e-9) {
        return Err(Error::PreconditionViolated(format!(
            "approximant endpoints differ by {closure_gap:.3e}"
        )));
    }

    let deviation_target = APPROXIMATION_BOUND_NUMERATOR / plan.n as f64 + path.tail_bound;
    if max_dev >= deviation_target {
        return Err(Error::BoundViolated {
            measured: max_dev,
            target: deviation_target,
        });
    }

    // retained spectrum must equal the modified diagonal as a multiset
    let mut spectrum_defect = 0.0_f64;
    for g in (0..=grid).step_by((grid / 16).max(1)) {
        let (vals, _) = matrix::normal_eig(&mats[g])?;
        let mut nonzero: Vec<C64> = vals.into_iter().filter(|v| v.norm() > 1e-12).collect();
        let mut expected: Vec<C64> = plan.lambda_prime.iter().map(|track| track[g]).collect();
        if nonzero.len() != expected.len() {
            return Err(Error::SpectraMismatch {
                g,
                detail: format!(
                    "approximant has {} nonzero eigenvalues, expected {}",
                    nonzero.len(),
                    expected.len()
                ),
            });
        }
        let key = |z: &C64| (z.re, z.im);
        nonzero.sort_by(|x, y| key(x).partial_cmp(&key(y)).expect("finite"));
        expected.sort_by(|x, y| key(x).partial_cmp(&key(y)).expect("finite"));
        for (got, want) in nonzero.iter().zip(expected.iter()) {
            spectrum_defect = spectrum_defect.max((got - want).norm());
        }
    }
    if spectrum_defect > 1e-8 * scale {
        return Err(Error::SpectraMismatch {
            g: 0,
            detail: format!("retained spectrum deviates by {spectrum_defect:.3e}"),
        });
    }

    let out = OperatorPath::from_matrices(mats, path.tail_bound, tol)?;
    Ok((
        out,
        AssemblyReport {
            max_deviation: max_dev,
            deviation_target,
            closure_gap,
            spectrum_defect,
        },
    ))
}
