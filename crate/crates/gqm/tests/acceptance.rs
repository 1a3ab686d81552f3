//! Acceptance gate for the library: each test verifies one headline
//! guarantee end to end, at fixed tolerances, over deterministic seeds.
//! Every test prints the measured margins so a run doubles as a report.

use std::time::Instant;

use num_complex::Complex64;

use gqm::config::Config;
use gqm::hilbert::{expectation, random_hermitian, random_state, HermitianOperator, StateVector};
use gqm::pointwise::{
    antiholomorphic_part, energy_density, map_differential, pullback_metric, verify_identity,
};
use gqm::surface::{
    energy_identity_integral, harmonic_relax, perturb, rational_curve_sample, relaxation_gradient,
    relaxation_local_energy, total_energy, total_symplectic_area, total_volume, Grid, SurfaceMap,
};
use gqm::uncertainty::{covariance, covariance_tensor, rs_check, saturation_witness};

const TRIAL_DIMS: [usize; 4] = [2, 3, 5, 9];
const TRIAL_HBARS: [f64; 2] = [1.0, 0.5];
const TRIALS_PER_CELL: u64 = 10_000;

/// Deterministic seed for trial k of a (dim, hbar) campaign cell.
fn cell_seed(dim: usize, hbar_index: usize, k: u64) -> u64 {
    (dim as u64) << 48 | (hbar_index as u64) << 40 | k
}

fn campaign_triple(dim: usize, seed: u64) -> (HermitianOperator, HermitianOperator, StateVector) {
    let a = random_hermitian(dim, seed.wrapping_mul(3).wrapping_add(1)).unwrap();
    let b = random_hermitian(dim, seed.wrapping_mul(3).wrapping_add(2)).unwrap();
    let psi = random_state(dim, seed.wrapping_mul(3)).unwrap();
    (a, b, psi)
}

fn for_each_campaign_trial(mut body: impl FnMut(&Config, usize, u64)) {
    for &dim in &TRIAL_DIMS {
        for (hi, &hbar) in TRIAL_HBARS.iter().enumerate() {
            let cfg = Config::with_hbar(hbar).unwrap();
            for k in 0..TRIALS_PER_CELL {
                body(&cfg, dim, cell_seed(dim, hi, k));
            }
        }
    }
}

/// Robertson-Schrodinger inequality, operator and geometric form, over
/// 10^4 random triples per dimension in {2,3,5,9} and hbar in {1, 0.5}:
/// both slacks stay above -1e-10, the forms agree through the (2/hbar)^2
/// rescaling within 1e-9, and the whole campaign finishes inside 30 s.
#[test]
fn rs_inequality_campaign_all_dims() {
    let start = Instant::now();
    let mut min_slack_op = f64::INFINITY;
    let mut min_slack_geo = f64::INFINITY;
    let mut max_gap = 0.0f64;
    let mut trials = 0u64;
    for_each_campaign_trial(|cfg, dim, seed| {
        let (a, b, psi) = campaign_triple(dim, seed);
        let report = rs_check(&a, &b, &psi, cfg).unwrap();
        let slack_op = report.slack_operator();
        let slack_geo = report.slack_geometric();
        let gap = report.form_gap(cfg.hbar);
        assert!(
            slack_op >= -1e-10,
            "operator-form slack {slack_op} at dim {dim}, seed {seed}"
        );
        assert!(
            slack_geo >= -1e-10,
            "geometric-form slack {slack_geo} at dim {dim}, seed {seed}"
        );
        assert!(
            gap <= 1e-9,
            "form agreement gap {gap} at dim {dim}, seed {seed}"
        );
        min_slack_op = min_slack_op.min(slack_op);
        min_slack_geo = min_slack_geo.min(slack_geo);
        max_gap = max_gap.max(gap);
        trials += 1;
    });
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "campaign took {elapsed:?}, budget is 30 s"
    );
    println!(
        "uncertainty campaign: {trials} trials in {elapsed:?}; min operator slack \
         {min_slack_op:.3e}, min geometric slack {min_slack_geo:.3e}, max form gap {max_gap:.3e}"
    );
}

/// The pullback of the Fubini-Study metric equals the covariance tensor
/// entrywise within 1e-12 on every campaign trial.
#[test]
fn covariance_tensor_matches_pullback_metric() {
    let mut worst = 0.0f64;
    for_each_campaign_trial(|cfg, dim, seed| {
        let (a, b, psi) = campaign_triple(dim, seed);
        let d = map_differential(&a, &b, &psi, cfg).unwrap();
        let h = pullback_metric(&d, cfg);
        let m = covariance_tensor(&a, &b, &psi, cfg).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                let diff = (h.entries[k][l] - m.entries[k][l]).abs();
                assert!(
                    diff <= 1e-12,
                    "entry ({k},{l}) differs by {diff} at dim {dim}, seed {seed}"
                );
                worst = worst.max(diff);
            }
        }
    });
    println!("metric vs covariance tensor: worst entry deviation {worst:.3e}");
}

/// Pointwise energy identity on every campaign trial: the energy density
/// is 1 within 1e-9 and the area coefficient splits into antiholomorphic
/// energy plus symplectic coefficient within 1e-9 wherever the pullback
/// metric is nondegenerate.
#[test]
fn pointwise_identity_campaign() {
    let mut worst_residual = 0.0f64;
    let mut worst_density = 0.0f64;
    let mut degenerate = 0u64;
    for_each_campaign_trial(|cfg, dim, seed| {
        let (a, b, psi) = campaign_triple(dim, seed);
        let report = verify_identity(&a, &b, &psi, cfg).unwrap();
        if report.degenerate {
            degenerate += 1;
            return;
        }
        let residual = report.residual().abs();
        assert!(
            residual <= 1e-9,
            "identity residual {residual} at dim {dim}, seed {seed}"
        );
        let d = map_differential(&a, &b, &psi, cfg).unwrap();
        let density = energy_density(&d, cfg).unwrap().expect("nondegenerate");
        assert!(
            (density - 1.0).abs() <= 1e-9,
            "energy density {density} at dim {dim}, seed {seed}"
        );
        worst_residual = worst_residual.max(residual);
        worst_density = worst_density.max((density - 1.0).abs());
    });
    println!(
        "pointwise identity: worst residual {worst_residual:.3e}, worst density deviation \
         {worst_density:.3e}, degenerate trials {degenerate}"
    );
}

/// Saturation: pairs constructed so that the second Hamiltonian field is
/// the complex rotation of the first have antiholomorphic energy <= 1e-10,
/// covariance <= 1e-10, and pass both the equality check and the witness;
/// the Pauli pair at the north pole reports operator sides exactly 1.
#[test]
fn saturated_pairs_are_holomorphic() {
    let cfg = Config::default();
    let mut worst_dbar = 0.0f64;
    let mut worst_cov = 0.0f64;
    for &dim in &TRIAL_DIMS {
        for k in 0..50u64 {
            let seed = cell_seed(dim, 7, k);
            let a = random_hermitian(dim, seed).unwrap();
            let psi = random_state(dim, seed ^ 0xabcd).unwrap();
            let mean = expectation(&a, &psi).unwrap();
            let phi = (a.apply(&psi).unwrap() - psi.components() * Complex64::new(mean, 0.0))
                * Complex64::new(0.0, 1.0);
            let outer = &phi * psi.components().adjoint() + psi.components() * phi.adjoint();
            let b = HermitianOperator::new(outer, &cfg).unwrap();

            let d = map_differential(&a, &b, &psi, &cfg).unwrap();
            let dbar = antiholomorphic_part(&d, &cfg).unwrap().norm_sq;
            assert!(dbar <= 1e-10, "dbar {dbar} at dim {dim}, trial {k}");
            let c = covariance(&a, &b, &psi).unwrap().abs();
            assert!(c <= 1e-10, "covariance {c} at dim {dim}, trial {k}");
            let report = rs_check(&a, &b, &psi, &cfg).unwrap();
            assert!(report.saturated, "not saturated at dim {dim}, trial {k}");
            assert!(
                saturation_witness(&a, &b, &psi, &cfg).unwrap(),
                "witness rejected dim {dim}, trial {k}"
            );
            worst_dbar = worst_dbar.max(dbar);
            worst_cov = worst_cov.max(c);
        }
    }
    // hand case: sigma_x, sigma_y at the north pole, hbar = 1
    let up = StateVector::basis(2, 0).unwrap();
    let pauli = rs_check(
        &gqm::hilbert::pauli_x(),
        &gqm::hilbert::pauli_y(),
        &up,
        &cfg,
    )
    .unwrap();
    assert!((pauli.lhs_operator - 1.0).abs() <= 1e-12);
    assert!((pauli.rhs_operator - 1.0).abs() <= 1e-12);
    assert!(pauli.saturated);
    println!(
        "saturated pairs: worst dbar {worst_dbar:.3e}, worst covariance {worst_cov:.3e}, \
         Pauli north-pole sides {} = {}",
        pauli.lhs_operator, pauli.rhs_operator
    );
}

fn disk_area_oracle(hbar: f64, degree: u32, radius: f64) -> f64 {
    let d = degree as f64;
    let r2d = radius.powf(2.0 * d);
    2.0 * std::f64::consts::PI * hbar * d * r2d / (1.0 + r2d)
}

/// Integral identity under refinement: for the degree-1 curve over the
/// radius-4 disk on 33^2, 65^2, 129^2 grids, the integrated identity
/// residual drops by at least the second-order factor per refinement and
/// the symplectic area lands within 1% of the closed-form disk integral.
#[test]
fn refinement_study_converges_to_disk_area() {
    let cfg = Config::default();
    let mut residuals = Vec::new();
    let mut finest_symplectic = 0.0;
    for n in [33usize, 65, 129] {
        let map = rational_curve_sample(1, Grid::disk(4.0, n).unwrap(), 1).unwrap();
        let breakdown = energy_identity_integral(&map, &cfg).unwrap();
        println!(
            "n={n}: energy {:.8}, area {:.8}, symplectic {:.8}, dbar {:.3e}, residual {:.3e}",
            breakdown.energy,
            breakdown.area,
            breakdown.symplectic,
            breakdown.dbar,
            breakdown.identity_residual()
        );
        residuals.push(breakdown.identity_residual().abs());
        finest_symplectic = breakdown.symplectic;
    }
    let oracle = disk_area_oracle(1.0, 1, 4.0);
    let ratio_coarse = residuals[0] / residuals[1];
    let ratio_fine = residuals[1] / residuals[2];
    println!(
        "residual ratios {ratio_coarse:.2}, {ratio_fine:.2}; symplectic {finest_symplectic:.6} \
         vs oracle {oracle:.6}"
    );
    assert!(
        ratio_coarse >= 3.0,
        "residual should shrink at least 3x per refinement, got {ratio_coarse}"
    );
    assert!(
        ratio_fine >= 3.0,
        "residual should shrink at least 3x per refinement, got {ratio_fine}"
    );
    assert!(
        (finest_symplectic - oracle).abs() <= 0.01 * oracle,
        "symplectic area {finest_symplectic} vs oracle {oracle}"
    );
}

/// Topological invariance: twenty seeded amplitude-0.05 perturbations of
/// the degree-1 disk sample (boundary fixed) move the symplectic area by
/// less than the finest-grid quadrature residual of the refinement study,
/// while the Dirichlet energy strictly increases every time.
#[test]
fn perturbation_leaves_symplectic_area_invariant() {
    let cfg = Config::default();
    let base = rational_curve_sample(1, Grid::disk(4.0, 129).unwrap(), 1).unwrap();
    let base_symplectic = total_symplectic_area(&base, &cfg).unwrap();
    let base_energy = total_energy(&base, &cfg).unwrap();
    let threshold = (base_symplectic - disk_area_oracle(1.0, 1, 4.0)).abs();
    let mut max_drift = 0.0f64;
    for seed in 0..20u64 {
        let bumped = perturb(&base, 0.05, seed).unwrap();
        let symplectic = total_symplectic_area(&bumped, &cfg).unwrap();
        let energy = total_energy(&bumped, &cfg).unwrap();
        let drift = (symplectic - base_symplectic).abs();
        assert!(
            drift < threshold,
            "seed {seed}: symplectic drift {drift} exceeds quadrature residual {threshold}"
        );
        assert!(
            energy > base_energy,
            "seed {seed}: energy {energy} did not rise above {base_energy}"
        );
        max_drift = max_drift.max(drift);
    }
    println!(
        "invariance: max symplectic drift {max_drift:.3e} vs quadrature residual {threshold:.3e}"
    );
}

/// Relaxation: projected gradient descent from a perturbed degree-1 sample
/// descends monotonically to within 1% of the symplectic floor in at most
/// 5000 steps at step size 0.1, and the analytic gradient agrees with
/// central finite differences to 1e-6 relative on ten random nodes.
#[test]
fn relaxation_reaches_symplectic_floor() {
    let cfg = Config::default();
    let base = rational_curve_sample(1, Grid::centered_square(2.0, 65).unwrap(), 1).unwrap();
    let bumped = perturb(&base, 0.25, 2025).unwrap();

    // gradient cross-check on the bumped map, ten interior nodes
    let grad = relaxation_gradient(&bumped, &cfg).unwrap();
    let eps = 1e-6;
    for t in 0..10u64 {
        let i = 1 + ((t.wrapping_mul(0x9e3779b97f4a7c15) >> 16) % 63) as usize;
        let j = 1 + ((t.wrapping_mul(0xc2b2ae3d27d4eb4f) >> 16) % 63) as usize;
        let node = bumped.grid().index(i, j);
        let psi = bumped.value(i, j).unwrap().components().clone();
        let dim = psi.len();
        let mut fd = Vec::with_capacity(2 * dim);
        let mut analytic = Vec::with_capacity(2 * dim);
        for k in 0..dim {
            for delta in [Complex64::new(eps, 0.0), Complex64::new(0.0, eps)] {
                let mut plus = psi.clone();
                plus[k] += delta;
                let mut minus = psi.clone();
                minus[k] -= delta;
                let df = (relaxation_local_energy(&bumped, i, j, &plus, &cfg).unwrap()
                    - relaxation_local_energy(&bumped, i, j, &minus, &cfg).unwrap())
                    / (2.0 * eps);
                fd.push(df);
            }
            analytic.push(grad[node][k].re);
            analytic.push(grad[node][k].im);
        }
        let diff: f64 = fd
            .iter()
            .zip(analytic.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(
            diff <= 1e-6 * scale,
            "node ({i},{j}): gradient mismatch {diff:.3e} vs scale {scale:.3e}"
        );
    }

    let outcome = harmonic_relax(&bumped, 5000, 0.1, &cfg).unwrap();
    let trace = &outcome.energy_trace;
    assert!(
        trace.windows(2).all(|w| w[1] <= w[0]),
        "energy trace increased somewhere"
    );
    let floor = total_symplectic_area(&outcome.map, &cfg).unwrap();
    let final_energy = *trace.last().unwrap();
    let excess = (final_energy - floor).abs();
    println!(
        "relaxation: {} accepted steps, energy {:.6} -> {final_energy:.6}, floor {floor:.6}, \
         excess {:.2}%",
        trace.len() - 1,
        trace[0],
        100.0 * excess / floor.abs()
    );
    assert!(
        excess <= 0.01 * floor.abs(),
        "final energy {final_energy} is not within 1% of the symplectic floor {floor}"
    );
}

/// Volume-energy inequality: the induced area never exceeds the Dirichlet
/// energy on any tested map, and the two agree within quadrature tolerance
/// exactly on the holomorphic (conformal) samples.
#[test]
fn volume_energy_inequality() {
    let cfg = Config::default();
    let mut checked = 0usize;
    let mut check = |label: &str, map: &SurfaceMap, conformal: bool| {
        let e = total_energy(map, &cfg).unwrap();
        let v = total_volume(map, &cfg).unwrap();
        assert!(
            v <= e + 1e-9 * (1.0 + e.abs()),
            "{label}: area {v} exceeds energy {e}"
        );
        if conformal {
            assert!(
                (v - e).abs() <= 2e-3 * e.abs().max(1e-12),
                "{label}: conformal sample has |V - E| = {} vs E = {e}",
                (v - e).abs()
            );
        }
        checked += 1;
    };

    let square = Grid::centered_square(2.0, 65).unwrap();
    let holo_square = rational_curve_sample(1, square.clone(), 1).unwrap();
    check("degree-1 square", &holo_square, true);
    let holo_disk = rational_curve_sample(1, Grid::disk(4.0, 65).unwrap(), 1).unwrap();
    check("degree-1 disk", &holo_disk, true);
    let holo_quadratic = rational_curve_sample(2, Grid::disk(4.0, 65).unwrap(), 1).unwrap();
    check("degree-2 disk", &holo_quadratic, true);
    let plane = rational_curve_sample(1, square.clone(), 3).unwrap();
    check("degree-1 into larger target", &plane, true);

    let psi = random_state(3, 99).unwrap();
    let constant = SurfaceMap::constant(Grid::centered_square(1.0, 33).unwrap(), &psi).unwrap();
    check("constant", &constant, false);

    for (seed, amp) in [(5u64, 0.3), (6, 1.5)] {
        let bumped = perturb(&holo_square, amp, seed).unwrap();
        check(&format!("perturbed amp {amp}"), &bumped, false);
    }

    let small = rational_curve_sample(1, Grid::centered_square(2.0, 33).unwrap(), 1).unwrap();
    let relaxed = harmonic_relax(&perturb(&small, 0.3, 7).unwrap(), 300, 0.1, &cfg)
        .unwrap()
        .map;
    check("relaxed", &relaxed, false);
    println!("volume-energy inequality held on {checked} maps");
}
