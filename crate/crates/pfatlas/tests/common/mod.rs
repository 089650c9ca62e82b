//! Shared test oracles, all independent of the library's solve path:
//! a closed-form two-bus family, a polar-coordinates Newton solver with a
//! finite-difference Jacobian, a fixed-size grid-seeded brute-force root
//! finder for four-unknown systems, and a pseudo-arclength continuation
//! tracer for fold points.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64;
use pfatlas::model::{BusKind, NetworkCase};
use pfatlas::power_flow::{PfModel, VoltageVector};
use pfatlas::SolutionSet;

// ---------------------------------------------------------------------------
// Closed-form two-bus oracle
// ---------------------------------------------------------------------------

/// Roots of the slack + PQ pair with unit slack voltage: with
/// `c = lambda * load * conj(z)`, the load-bus voltage satisfies
/// `Im V = Im c` and `Re V = 1/2 +- sqrt(1/4 - Re c - (Im c)^2)`.
pub struct TwoBusOracle {
    pub load: Complex64,
    pub z: Complex64,
}

impl TwoBusOracle {
    pub fn new(load: Complex64, z: Complex64) -> Self {
        TwoBusOracle { load, z }
    }

    pub fn discriminant(&self, lambda: f64) -> f64 {
        let c = self.load * self.z.conj() * lambda;
        0.25 - c.re - c.im * c.im
    }

    /// Both load-bus voltages, high root first; None past the saddle node.
    pub fn roots(&self, lambda: f64) -> Option<(Complex64, Complex64)> {
        let c = self.load * self.z.conj() * lambda;
        let disc = 0.25 - c.re - c.im * c.im;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        Some((
            Complex64::new(0.5 + s, c.im),
            Complex64::new(0.5 - s, c.im),
        ))
    }

    /// Loading factor at which the two roots coalesce (discriminant zero).
    pub fn lambda_star(&self) -> f64 {
        let c = self.load * self.z.conj();
        let (cr, ci2) = (c.re, c.im * c.im);
        if ci2 == 0.0 {
            0.25 / cr
        } else {
            (-cr + (cr * cr + ci2).sqrt()) / (2.0 * ci2)
        }
    }
}

// ---------------------------------------------------------------------------
// Polar-coordinates Newton oracle
// ---------------------------------------------------------------------------

/// Dense admittance built with explicit per-branch block stamps; written
/// separately from the library's sparse builder.
fn dense_admittance(case: &NetworkCase) -> DMatrix<Complex64> {
    let n = case.buses.len();
    let mut y: DMatrix<Complex64> = DMatrix::zeros(n, n);
    for br in &case.branches {
        let f = case.bus_index(br.from).unwrap();
        let t = case.bus_index(br.to).unwrap();
        let ys = br.impedance.inv();
        let bc = Complex64::new(0.0, br.charging / 2.0);
        let tap = Complex64::from_polar(br.tap, br.shift_deg.to_radians());
        y[(f, f)] += (ys + bc) / tap.norm_sqr();
        y[(t, t)] += ys + bc;
        y[(f, t)] -= ys / tap.conj();
        y[(t, f)] -= ys / tap;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += bus.shunt;
    }
    y
}

/// Textbook polar Newton power flow with a finite-difference Jacobian.
/// Returns the solved voltage phasors, or None if it fails to converge.
pub fn polar_newton_solve(case: &NetworkCase, tol: f64, max_iter: usize) -> Option<Vec<Complex64>> {
    let n = case.buses.len();
    let y = dense_admittance(case);
    let slack = case.slack_index();
    let p_sched: Vec<f64> = (0..n).map(|i| case.net_injection(i).re).collect();
    let q_sched: Vec<f64> = (0..n).map(|i| case.net_injection(i).im).collect();

    // Unknown layout: angles for every non-slack bus, magnitudes for PQ.
    let angle_vars: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mag_vars: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind == BusKind::Pq)
        .collect();
    let m = angle_vars.len() + mag_vars.len();

    let mut theta = vec![0.0_f64; n];
    let mut vm: Vec<f64> = (0..n)
        .map(|i| match case.buses[i].kind {
            BusKind::Slack => case.slack_voltage().norm(),
            BusKind::Pv => case.voltage_setpoint(case.buses[i].id).unwrap(),
            BusKind::Pq => 1.0,
        })
        .collect();

    let mismatch = |theta: &[f64], vm: &[f64]| -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (r, &i) in angle_vars.iter().enumerate() {
            let mut p = 0.0;
            for k in 0..n {
                let g = y[(i, k)].re;
                let b = y[(i, k)].im;
                let dt = theta[i] - theta[k];
                p += vm[i] * vm[k] * (g * dt.cos() + b * dt.sin());
            }
            out[r] = p_sched[i] - p;
        }
        for (r, &i) in mag_vars.iter().enumerate() {
            let mut q = 0.0;
            for k in 0..n {
                let g = y[(i, k)].re;
                let b = y[(i, k)].im;
                let dt = theta[i] - theta[k];
                q += vm[i] * vm[k] * (g * dt.sin() - b * dt.cos());
            }
            out[angle_vars.len() + r] = q_sched[i] - q;
        }
        out
    };

    for _ in 0..max_iter {
        let f0 = mismatch(&theta, &vm);
        if f0.amax() < tol {
            return Some(
                (0..n)
                    .map(|i| Complex64::from_polar(vm[i], theta[i]))
                    .collect(),
            );
        }
        // Finite-difference Jacobian of the mismatch in the unknowns.
        let h = 1e-7;
        let mut jac = DMatrix::zeros(m, m);
        for c in 0..m {
            let (mut tp, mut vp) = (theta.clone(), vm.clone());
            let (mut tm, mut vmn) = (theta.clone(), vm.clone());
            if c < angle_vars.len() {
                tp[angle_vars[c]] += h;
                tm[angle_vars[c]] -= h;
            } else {
                vp[mag_vars[c - angle_vars.len()]] += h;
                vmn[mag_vars[c - angle_vars.len()]] -= h;
            }
            let fp = mismatch(&tp, &vp);
            let fm = mismatch(&tm, &vmn);
            for r in 0..m {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        // mismatch = sched - calc, so J dx = f0 moves calc toward sched.
        let dx = jac.lu().solve(&f0)?;
        for (c, &i) in angle_vars.iter().enumerate() {
            theta[i] += dx[c];
        }
        for (c, &i) in mag_vars.iter().enumerate() {
            vm[i] += dx[angle_vars.len() + c];
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Grid-seeded brute-force oracle (four real unknowns)
// ---------------------------------------------------------------------------

/// Independent rectangular residual for a 3-bus case (slack first):
/// unknowns `(e2, f2, e3, f3)`.
pub struct ThreeBusSystem {
    y: DMatrix<Complex64>,
    kinds: [BusKind; 3],
    injection: [Complex64; 3],
    vset2: [f64; 3],
    slack_v: Complex64,
}

impl ThreeBusSystem {
    pub fn new(case: &NetworkCase) -> Self {
        assert_eq!(case.buses.len(), 3);
        assert_eq!(case.slack_index(), 0, "oracle assumes slack-first cases");
        let kinds = [
            case.buses[0].kind,
            case.buses[1].kind,
            case.buses[2].kind,
        ];
        let injection = [
            case.net_injection(0),
            case.net_injection(1),
            case.net_injection(2),
        ];
        let mut vset2 = [0.0; 3];
        for idx in 0..3 {
            if kinds[idx] == BusKind::Pv {
                let v = case.voltage_setpoint(case.buses[idx].id).unwrap();
                vset2[idx] = v * v;
            }
        }
        ThreeBusSystem {
            y: dense_admittance(case),
            kinds,
            injection,
            vset2,
            slack_v: case.slack_voltage(),
        }
    }

    pub fn residual(&self, x: &Vector4<f64>) -> Vector4<f64> {
        let v = [
            self.slack_v,
            Complex64::new(x[0], x[1]),
            Complex64::new(x[2], x[3]),
        ];
        let mut out = Vector4::zeros();
        for bus in 1..3 {
            let mut current = Complex64::ZERO;
            for k in 0..3 {
                current += self.y[(bus, k)] * v[k];
            }
            let s = v[bus] * current.conj();
            let row = 2 * (bus - 1);
            out[row] = s.re - self.injection[bus].re;
            out[row + 1] = match self.kinds[bus] {
                BusKind::Pq => s.im - self.injection[bus].im,
                BusKind::Pv => v[bus].norm_sqr() - self.vset2[bus],
                BusKind::Slack => unreachable!(),
            };
        }
        out
    }

    /// Newton from one start with a central-difference Jacobian (exact for
    /// these quadratics up to roundoff). Returns a root or None.
    pub fn newton(&self, mut x: Vector4<f64>, tol: f64, max_iter: usize) -> Option<Vector4<f64>> {
        let h = 1e-6;
        for _ in 0..max_iter {
            let r = self.residual(&x);
            let norm = r.amax();
            if norm < tol {
                return Some(x);
            }
            let mut jac = Matrix4::zeros();
            for c in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let rp = self.residual(&xp);
                let rm = self.residual(&xm);
                for rrow in 0..4 {
                    jac[(rrow, c)] = (rp[rrow] - rm[rrow]) / (2.0 * h);
                }
            }
            let dx = jac.lu().solve(&r)?;
            x -= dx;
            if x.amax() > 1e3 {
                return None;
            }
        }
        None
    }

    /// Distinct real roots found by seeding Newton from `per_axis^4` grid
    /// points over `[-half, half]^4`.
    pub fn grid_roots(&self, per_axis: usize, half: f64, tol: f64) -> Vec<Vector4<f64>> {
        let coord = |k: usize| -half + 2.0 * half * (k as f64 + 0.5) / per_axis as f64;
        let total = per_axis * per_axis * per_axis * per_axis;
        let chunk = 50_000;
        let chunks: Vec<usize> = (0..total.div_ceil(chunk)).collect();
        let found: Vec<Vec<Vector4<f64>>> = {
            use rayon::prelude::*;
            chunks
                .par_iter()
                .map(|&c| {
                    let mut local: Vec<Vector4<f64>> = Vec::new();
                    for idx in (c * chunk)..((c + 1) * chunk).min(total) {
                        let (i, rest) = (idx % per_axis, idx / per_axis);
                        let (j, rest) = (rest % per_axis, rest / per_axis);
                        let (k, l) = (rest % per_axis, rest / per_axis);
                        let x0 = Vector4::new(coord(i), coord(j), coord(k), coord(l));
                        if let Some(root) = self.newton(x0, tol, 40) {
                            if local
                                .iter()
                                .all(|r| (r - root).amax() > 1e-6)
                            {
                                local.push(root);
                            }
                        }
                    }
                    local
                })
                .collect()
        };
        let mut roots: Vec<Vector4<f64>> = Vec::new();
        for batch in found {
            for root in batch {
                if roots.iter().all(|r| (r - root).amax() > 1e-6) {
                    roots.push(root);
                }
            }
        }
        roots
    }
}

/// Pack the non-slack voltages of a solution in a set into 4-vectors.
pub fn set_as_vectors(set: &SolutionSet) -> Vec<Vector4<f64>> {
    set.solutions
        .iter()
        .map(|s| {
            let v = s.voltages.as_slice();
            Vector4::new(v[1].re, v[1].im, v[2].re, v[2].im)
        })
        .collect()
}

/// Set equality within `tol`: perfect matching required in both directions.
pub fn assert_same_roots(ours: &[Vector4<f64>], oracle: &[Vector4<f64>], tol: f64, what: &str) {
    assert_eq!(
        ours.len(),
        oracle.len(),
        "{what}: {} enumerated vs {} oracle roots\nours: {ours:?}\noracle: {oracle:?}",
        ours.len(),
        oracle.len()
    );
    let mut taken = vec![false; oracle.len()];
    for (i, a) in ours.iter().enumerate() {
        let mut matched = false;
        for (j, b) in oracle.iter().enumerate() {
            if !taken[j] && (a - b).amax() <= tol {
                taken[j] = true;
                matched = true;
                break;
            }
        }
        assert!(matched, "{what}: enumerated root {i} = {a:?} has no oracle match");
    }
}

// ---------------------------------------------------------------------------
// Pseudo-arclength continuation oracle
// ---------------------------------------------------------------------------

/// Trace the high-voltage branch of `case` in the load scaling factor and
/// return the largest lambda reached before the fold (dlambda/ds turning
/// negative), refined until the step is below `ds_min`.
pub fn continuation_fold_lambda(case: &NetworkCase, lambda0: f64, ds0: f64, ds_min: f64) -> f64 {
    let model1 = PfModel::new(case).unwrap();
    let model0 = PfModel::new(&case.scale_loads(0.0)).unwrap();
    let m = model1.dimension();

    // F(x, lambda) = F1(x) + (1 - lambda) * inj, with inj constant.
    let probe = vec![0.25_f64; m];
    let f1 = DVector::from_vec(model1.stacked_residual(&probe));
    let f0 = DVector::from_vec(model0.stacked_residual(&probe));
    let inj = &f0 - &f1;
    let residual = |x: &DVector<f64>, lambda: f64| -> DVector<f64> {
        let base = DVector::from_vec(model1.stacked_residual(x.as_slice()));
        base + &inj * (1.0 - lambda)
    };

    // Start on the branch.
    let start_case = case.scale_loads(lambda0);
    let start_model = PfModel::new(&start_case).unwrap();
    let sol = start_model
        .newton_refine(
            &VoltageVector::flat_start(&start_case),
            &pfatlas::SolverConfig::default(),
        )
        .expect("high-voltage branch exists at lambda0");
    let mut x = start_model.pack(&sol.voltages);
    let mut lambda = lambda0;

    // Initial tangent: increase lambda, correct x at fixed lambda.
    let mut tangent_x = DVector::zeros(m);
    let mut tangent_l = 1.0;
    let mut ds = ds0;
    let mut best_lambda = lambda;

    for _ in 0..10_000 {
        // Predictor.
        let xp = &x + &tangent_x * ds;
        let lp = lambda + tangent_l * ds;
        // Corrector: Newton on [F; arclength].
        let (mut xc, mut lc) = (xp.clone(), lp);
        let mut ok = false;
        for _ in 0..20 {
            let f = residual(&xc, lc);
            let arc = (&xc - &x).norm_squared() + (lc - lambda) * (lc - lambda) - ds * ds;
            if f.amax() < 1e-10 && arc.abs() < 1e-12 {
                ok = true;
                break;
            }
            let jac_x = model1.stacked_jacobian(xc.as_slice());
            let mut aug = DMatrix::zeros(m + 1, m + 1);
            aug.view_mut((0, 0), (m, m)).copy_from(&jac_x);
            for r in 0..m {
                aug[(r, m)] = -inj[r];
            }
            for c in 0..m {
                aug[(m, c)] = 2.0 * (xc[c] - x[c]);
            }
            aug[(m, m)] = 2.0 * (lc - lambda);
            let mut rhs = DVector::zeros(m + 1);
            for r in 0..m {
                rhs[r] = f[r];
            }
            rhs[m] = arc;
            let Some(step) = aug.lu().solve(&rhs) else {
                break;
            };
            for r in 0..m {
                xc[r] -= step[r];
            }
            lc -= step[m];
        }
        if !ok {
            ds *= 0.5;
            if ds < ds_min {
                break;
            }
            continue;
        }
        let new_tx = (&xc - &x) / ds;
        let new_tl = (lc - lambda) / ds;
        if lc > best_lambda {
            best_lambda = lc;
        }
        let past_fold = new_tl < 0.0;
        x = xc;
        lambda = lc;
        tangent_x = new_tx;
        tangent_l = new_tl;
        if past_fold {
            // Shrink toward the turning point from the far side.
            ds *= 0.5;
            if ds < ds_min {
                break;
            }
        } else {
            ds = (ds * 1.3).min(ds0);
        }
    }
    best_lambda
}
