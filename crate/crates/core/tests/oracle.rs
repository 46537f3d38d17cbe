//! Modal traces against the finite-difference oracle.
//!
//! The special initial state jumps from `0` to `1/gamma0` at the driven end.
//! That jump travels at `sqrt(a(0))` and reaches `x = L` at
//! `t_f = L / sqrt(a(0))`; the truncated, Cesaro-averaged modal series
//! smears it over roughly `0.1` in time, while the oracle keeps it within a
//! few nodes. The jump experiments are therefore compared away from `t_f`.

use memkernel::forward::*;
use memkernel::kernelspace::*;
use memkernel::quad::*;
use memkernel::spectral::*;

const L: f64 = 1.0;
const WINDOW: f64 = 0.15;

struct Case {
    grid: TimeGrid,
    a: Kernel,
    beta: Kernel,
    dd: SpectralBasis,
    dn: SpectralBasis,
    ms: MeasurementSet,
    intervals: usize,
}

fn case() -> Case {
    let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
    let a = Kernel::prony(1.0, &[(0.5, 1.0)]).unwrap();
    let beta = Kernel::prony(0.0, &[(0.8, 2.0)]).unwrap();
    let dd = build_basis(BasisKind::DirichletDirichlet, L, 256).unwrap();
    let dn = build_basis(BasisKind::DirichletNeumann, L, 256).unwrap();
    let ms = MeasurementSet::simulate(&a, &beta, &dd, &InputSignal::unit_ramp(), &grid, Some(&dn)).unwrap();
    let intervals = courant_intervals(L, a.value_at_zero(), grid.dt());
    Case {
        grid,
        a,
        beta,
        dd,
        dn,
        ms,
        intervals,
    }
}

/// Relative L2 difference over nodes farther than `WINDOW` from `t_front`.
fn away_from_front(modal: &[f64], oracle: &[f64], grid: &TimeGrid, t_front: f64) -> f64 {
    let keep: Vec<usize> = (0..grid.len())
        .filter(|&j| (grid.t(j) - t_front).abs() > WINDOW)
        .collect();
    let u: Vec<f64> = keep.iter().map(|&j| modal[j]).collect();
    let v: Vec<f64> = keep.iter().map(|&j| oracle[j]).collect();
    relative_l2(&u, &v, u.len())
}

#[test]
fn modal_and_oracle_agree() {
    let c = case();
    let t_front = L / c.a.value_at_zero().sqrt();
    let g = InputSignal::unit_ramp();
    let zero_drive = InputSignal::new(Kernel::zero());

    // boundary drive, zero initial state: smooth in time
    let sol = fd_oracle(
        &c.a,
        &c.beta,
        L,
        &BoundarySpec::DirichletDirichlet(g.clone()),
        &|_| 0.0,
        c.intervals,
        &c.grid,
    )
    .unwrap();
    let state = ModalState::compute(&c.a, &c.beta, &c.dd, &g, &c.grid).unwrap();
    let field = field_relative_l2(&state.field(&sol.x, None), &sol.field);
    let flux = relative_l2(c.ms.y_f.values(), &sol.flux_right, c.grid.len());
    eprintln!("drive experiment: field {field:.2e}, Y_f {flux:.2e}");
    assert!(field <= 1e-2 && flux <= 1e-2);

    let sol = fd_oracle(
        &c.a,
        &c.beta,
        L,
        &BoundarySpec::DirichletNeumann(g),
        &|_| 0.0,
        c.intervals,
        &c.grid,
    )
    .unwrap();
    let tl = relative_l2(
        c.ms.variant_theta_l.as_ref().unwrap().values(),
        &sol.trace_right(),
        c.grid.len(),
    );
    eprintln!("insulated end, drive experiment: theta(L) {tl:.2e}");
    assert!(tl <= 1e-2);

    // special initial state, no drive
    let xi0 = special_initial_state(&c.dd).unwrap();
    let sol = fd_oracle(
        &c.a,
        &c.beta,
        L,
        &BoundarySpec::DirichletDirichlet(zero_drive.clone()),
        &|x| xi0.profile(x),
        c.intervals,
        &c.grid,
    )
    .unwrap();
    let k = c.ms.k.values();
    let full = relative_l2(k, &sol.flux_right, c.grid.len());
    let away = away_from_front(k, &sol.flux_right, &c.grid, t_front);
    eprintln!("K: full trace {full:.2e}, away from the front {away:.2e}");
    assert!(away <= 1e-2);

    let g0 = c.dn.gamma0();
    let sol = fd_oracle(
        &c.a,
        &c.beta,
        L,
        &BoundarySpec::DirichletNeumann(zero_drive),
        &|_| 1.0 / g0,
        c.intervals,
        &c.grid,
    )
    .unwrap();
    let hl = c.ms.variant_hl.as_ref().unwrap().values();
    let oracle = sol.trace_right();
    let full = relative_l2(hl, &oracle, c.grid.len());
    let away = away_from_front(hl, &oracle, &c.grid, t_front);
    eprintln!("insulated end, special state: full trace {full:.2e}, away from the front {away:.2e}");
    assert!(away <= 1e-2);
}

#[test]
fn jump_size_matches_across_the_front() {
    // the drop of K across the front, measured just outside the window
    let c = case();
    let t_front = L / c.a.value_at_zero().sqrt();
    let xi0 = special_initial_state(&c.dd).unwrap();
    let sol = fd_oracle(
        &c.a,
        &c.beta,
        L,
        &BoundarySpec::DirichletDirichlet(InputSignal::new(Kernel::zero())),
        &|x| xi0.profile(x),
        c.intervals,
        &c.grid,
    )
    .unwrap();
    let before = c.grid.index_at_or_before(t_front - WINDOW - 0.01);
    let after = c.grid.index_at_or_before(t_front + WINDOW + 0.01);
    let modal = c.ms.k.values()[after] - c.ms.k.values()[before];
    let oracle = sol.flux_right[after] - sol.flux_right[before];
    assert!((modal - oracle).abs() <= 1e-2 * oracle.abs(), "{modal} vs {oracle}");
}
