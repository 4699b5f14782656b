use crossknit_core::pressure::{
    apply_hysteresis_drift, field_to_resistance, rasterize, taxel_resistance, HysteresisParams, HysteresisState,
};
use crossknit_core::{ContactPatch, ContactShape, Grid, PressureField, Resistance, SensorConfig, TransferParams};
use proptest::prelude::*;

fn cfg(name: &str) -> SensorConfig {
    SensorConfig::preset(name).unwrap()
}

fn patch_strategy(config: &SensorConfig) -> impl Strategy<Value = ContactPatch> {
    let (w, h) = (config.width_mm(), config.height_mm());
    (0usize..4, 1.0..20.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..40.0f64).prop_map(move |(kind, size, u, v, f)| {
        let shape = match kind {
            0 => ContactShape::Disk { radius_mm: size },
            1 => ContactShape::Square { side_mm: size },
            2 => ContactShape::Sphere { radius_mm: size },
            _ => ContactShape::Point,
        };
        // Keep every footprint fully on the surface.
        let e = shape.extent_mm();
        ContactPatch {
            id: String::new(),
            shape,
            center_mm: [e + u * (w - 2.0 * e), e + v * (h - 2.0 * e)],
            force_n: f,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rasterize_conserves_force(patches in prop::collection::vec(patch_strategy(&cfg("4x4")), 0..6)) {
        let c = cfg("4x4");
        let field = PressureField::new(patches);
        let grid = rasterize(&field, &c, &TransferParams::default());
        let sum: f64 = grid.as_slice().iter().sum();
        let want = field.total_force();
        prop_assert!((sum - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", sum, want);
        prop_assert!(grid.as_slice().iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn transfer_strictly_decreasing(a in 2.5..200.0f64, b in 2.5..200.0f64) {
        prop_assume!(a != b);
        let p = TransferParams::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r_lo = taxel_resistance(lo, &p).ohms().unwrap();
        let r_hi = taxel_resistance(hi, &p).ohms().unwrap();
        prop_assert!(r_hi < r_lo);
    }

    #[test]
    fn single_taxel_patches_are_permutation_equivariant(
        forces in prop::collection::vec(3.0..40.0f64, 1..8),
        perm in Just((0..16).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let c = cfg("4x4");
        let p = TransferParams::default();
        let field_at = |cells: &[usize]| {
            PressureField::new(
                forces
                    .iter()
                    .zip(cells)
                    .map(|(&f, &k)| {
                        let (x, y) = c.taxel_center(k / 4, k % 4);
                        ContactPatch::disk("w", x, y, 6.0, f)
                    })
                    .collect(),
            )
        };
        let cells: Vec<usize> = (0..forces.len()).collect();
        let moved: Vec<usize> = cells.iter().map(|&k| perm[k]).collect();
        let a = field_to_resistance(&field_at(&cells), &c, &p, None);
        let b = field_to_resistance(&field_at(&moved), &c, &p, None);
        for k in 0..16 {
            let (r, col) = (k / 4, k % 4);
            let (pr, pc) = (perm[k] / 4, perm[k] % 4);
            match (a.get(r, col), b.get(pr, pc)) {
                (Resistance::Open, Resistance::Open) => {}
                (Resistance::Ohms(x), Resistance::Ohms(y)) => prop_assert!((x - y).abs() <= 1e-9 * x),
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }
    }
}

#[test]
fn point_and_field_examples() {
    let c = cfg("4x4");
    let p = TransferParams::default();
    assert_eq!(field_to_resistance(&PressureField::default(), &c, &p, None).finite_count(), 0);

    let (x, y) = c.taxel_center(1, 2);
    let one = PressureField::new(vec![ContactPatch::disk("a", x, y, 10.0, 10.0)]);
    let r = field_to_resistance(&one, &c, &p, None);
    assert_eq!(r.finite_count(), 1);
    assert_eq!(r.get(1, 2), Resistance::Ohms(50_000.0));

    let weights: Vec<ContactPatch> = [(0, 0), (0, 3), (2, 1), (3, 3)]
        .iter()
        .map(|&(row, col)| {
            let (x, y) = c.taxel_center(row, col);
            ContactPatch::disk("w", x, y, 8.0, 12.0)
        })
        .collect();
    let r = field_to_resistance(&PressureField::new(weights), &c, &p, None);
    let finite: Vec<(usize, usize)> = r.grid().indexed().filter(|(_, v)| !v.is_open()).map(|(t, _)| t).collect();
    assert_eq!(finite, vec![(0, 0), (0, 3), (2, 1), (3, 3)]);
}

#[test]
fn concentrated_sphere_reads_lower_resistance_than_wide_disk() {
    let c = cfg("4x4");
    let p = TransferParams::default();
    let (x, y) = c.taxel_center(1, 1);
    let at = |shape| PressureField::new(vec![ContactPatch { id: "s".into(), shape, center_mm: [x, y], force_n: 15.0 }]);
    let sphere = field_to_resistance(&at(ContactShape::Sphere { radius_mm: 10.0 }), &c, &p, None);
    let disk = field_to_resistance(&at(ContactShape::Disk { radius_mm: 15.0 }), &c, &p, None);
    let (rs, rd) = (sphere.get(1, 1).ohms().unwrap(), disk.get(1, 1).ohms().unwrap());
    assert!(rs < rd, "sphere {rs} disk {rd}");
    // The wide disk spills onto the neighbours; the sphere does not.
    assert_eq!(sphere.finite_count(), 1);
    assert!(rasterize(&at(ContactShape::Disk { radius_mm: 15.0 }), &c, &p)[(1, 2)] > 0.0);
}

#[test]
fn drift_over_load_cycles_matches_closed_form() {
    let params = HysteresisParams::default();
    let mut state = HysteresisState::new(1, 1, params);
    let on = Grid::filled(1, 1, 10.0);
    let off = Grid::filled(1, 1, 0.0);
    let step_us = 1.0e6;
    let mut last_shift = 0.0;
    for cycle in 1..=100 {
        let mut first = None;
        for _ in 0..5 {
            let out = apply_hysteresis_drift(&mut state, &on, step_us);
            first.get_or_insert(out[(0, 0)]);
        }
        for _ in 0..5 {
            assert_eq!(apply_hysteresis_drift(&mut state, &off, step_us)[(0, 0)], 0.0);
        }
        let loaded_s = 5.0 * cycle as f64;
        let analytic = params.drift_n * (1.0 - (-loaded_s / params.tau_s).exp());
        assert!((state.drift(0, 0) - analytic.min(params.drift_cap_n)).abs() < 1e-12);
        // The first loaded sample of the cycle carries the drift accrued so far.
        let shift = first.unwrap() - 10.0;
        assert!(shift >= last_shift && shift <= params.drift_cap_n);
        last_shift = shift;
    }
    assert!(last_shift > 0.99 * params.drift_n * (1.0 - (-495.0 / params.tau_s).exp()));
}

#[test]
fn zero_force_leaves_hysteresis_state_untouched() {
    let mut state = HysteresisState::new(2, 2, HysteresisParams::default());
    let before = state.clone();
    let out = apply_hysteresis_drift(&mut state, &Grid::filled(2, 2, 0.0), 1e6);
    assert!(out.as_slice().iter().all(|&f| f == 0.0));
    assert_eq!(state, before);
}
