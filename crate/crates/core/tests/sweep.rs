use kppfront::charspec::{c_star, c_starstar, CriticalSpeed};
use kppfront::sweep::{
    labels_are_ordered, parse_range, sweep_plane, write_csv, Budget, EvidenceMode, Region,
    SolverOutcome,
};

fn full(threads: usize) -> Budget {
    Budget {
        evidence: EvidenceMode::Full,
        threads,
        ..Budget::default()
    }
}

fn one(tau: f64, c: f64, budget: &Budget) -> kppfront::sweep::RegionCell {
    sweep_plane(&[tau], &[c], budget).unwrap().remove(0)
}

#[test]
fn short_delay_cell_is_monotone_with_a_converged_front() {
    let cell = one(0.2, 3.0, &full(1));
    assert_eq!(cell.region, Region::Monotone);
    assert!(matches!(cell.evidence.solver_outcome, SolverOutcome::Converged { .. }));
    assert_eq!(cell.evidence.empirical, Some(Region::Monotone));
    assert!(cell.contradiction.is_none());
}

#[test]
fn candidate_cell_settles_at_one() {
    let cell = one(0.8, 2.5, &full(1));
    assert_eq!(cell.region, Region::NonMonotoneCandidate);
    assert!(matches!(cell.evidence.solver_outcome, SolverOutcome::Converged { .. }));
    assert_eq!(cell.evidence.empirical, Some(Region::NonMonotoneCandidate));
    assert!(cell.contradiction.is_none());
}

#[test]
fn long_delay_cell_has_no_front() {
    let budget = Budget {
        evidence: EvidenceMode::None,
        ..Budget::default()
    };
    let cell = one(1.9, 2.0, &budget);
    assert_eq!(cell.region, Region::NoFront);
    assert_eq!(cell.evidence.solver_outcome, SolverOutcome::NotRun);
    assert!(cell.evidence.empirical.is_none());
    assert!(matches!(cell.evidence.c_starstar, CriticalSpeed::BelowMinimal(_)));
}

#[test]
fn sub_minimal_cells_are_never_solved() {
    let cell = one(0.5, 1.5, &full(1));
    assert_eq!(cell.region, Region::SubMinimal);
    assert_eq!(cell.evidence.solver_outcome, SolverOutcome::NotRun);
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let taus = parse_range("0.2:0.8:0.3").unwrap();
    let cs = parse_range("1.75:3.25:0.5").unwrap();
    let render = |threads| {
        let cells = sweep_plane(&taus, &cs, &full(threads)).unwrap();
        assert!(labels_are_ordered(&cells));
        let mut buf = Vec::new();
        write_csv(&cells, &mut buf).unwrap();
        buf
    };
    let a = render(1);
    assert_eq!(a, render(1));
    assert_eq!(a, render(4));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + taus.len() * cs.len());
    assert!(!text.contains("contradiction"));
}

#[test]
fn analytic_labels_follow_the_curves() {
    let taus = parse_range("0:2:0.05").unwrap();
    let cs = parse_range("1.5:8:0.25").unwrap();
    let budget = Budget {
        evidence: EvidenceMode::None,
        threads: 2,
        ..Budget::default()
    };
    let cells = sweep_plane(&taus, &cs, &budget).unwrap();
    assert_eq!(cells.len(), taus.len() * cs.len());
    assert!(labels_are_ordered(&cells));
    for cell in &cells {
        let monotone_edge = cell.evidence.c_star.value();
        let expected = if cell.c < 2.0 {
            Region::SubMinimal
        } else if cell.c <= monotone_edge && !matches!(cell.evidence.c_star, CriticalSpeed::BelowMinimal(_)) {
            Region::Monotone
        } else if cell.c <= cell.evidence.c_starstar.value()
            && !matches!(cell.evidence.c_starstar, CriticalSpeed::BelowMinimal(_))
        {
            Region::NonMonotoneCandidate
        } else {
            Region::NoFront
        };
        assert_eq!(cell.region, expected, "tau = {}, c = {}", cell.tau, cell.c);
    }
}

#[test]
fn critical_curves_are_ordered() {
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        let tau = 0.01 * k as f64;
        let a = c_star(tau).unwrap();
        let b = c_starstar(tau).unwrap();
        // the monotone edge never lies above the existence edge
        assert!(a.value() <= b.value() + 1e-9, "tau = {tau}: {a:?} vs {b:?}");
        // and only moves down as the delay grows
        assert!(a.value() <= prev + 1e-9, "c* rises at tau = {tau}");
        prev = a.value();
    }
}

#[test]
fn malformed_ranges_are_rejected() {
    for bad in ["1:2", "2:1:0.1", "0:1:0", "a:b:c", "0:1:-1"] {
        assert!(parse_range(bad).is_err(), "{bad}");
    }
    assert_eq!(parse_range("0:1:0.25").unwrap().len(), 5);
}
