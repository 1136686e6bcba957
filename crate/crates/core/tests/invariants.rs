use proptest::prelude::*;

use qbtransfer::{
    energies_from_states, propagate_piecewise, Drive, FullState, ModelVariant, ReducedState,
    Scenario, StateVector, SwitchingSchedule, SystemSpec, TimeGrid, Window,
};

fn schedule_strategy() -> impl Strategy<Value = SwitchingSchedule> {
    prop::collection::vec((0.1f64..20.0, 0.1f64..40.0, -1.5f64..1.5), 1..5).prop_map(|parts| {
        let mut t = 0.0;
        let windows = parts
            .into_iter()
            .map(|(gap, width, amp)| {
                let w = Window::new(t + gap, t + gap + width).with_amplitude(amp);
                t = w.t_off;
                w
            })
            .collect();
        SwitchingSchedule::new(windows).unwrap()
    })
}

fn norm_error<S: StateVector>(states: &[S]) -> f64 {
    states
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn piecewise_is_unitary_for_any_model(
        g in 0.001f64..0.1,
        omega_c in 0.5f64..1.5,
        omega_m in 0.5f64..1.5,
        cm in schedule_strategy(),
        bm in schedule_strategy(),
        n in 3usize..200,
    ) {
        for variant in [ModelVariant::Reduced, ModelVariant::FullRwa, ModelVariant::FullCounterRotating] {
            let spec = SystemSpec::new(Scenario::TwoStepMediated, variant, g, omega_c, Some(omega_m)).unwrap();
            let drive = Drive::mediated(&cm, &bm);
            let end = cm.end().unwrap().max(bm.end().unwrap()) + 5.0;
            let grid = TimeGrid::for_drive(0.0, end, n, &drive).unwrap();
            let err = if variant.is_full() {
                let init = FullState::designated_initial(Scenario::TwoStepMediated);
                norm_error(&propagate_piecewise(&spec, drive, &grid, &init).unwrap())
            } else {
                let init = ReducedState::designated_initial(Scenario::TwoStepMediated);
                norm_error(&propagate_piecewise(&spec, drive, &grid, &init).unwrap())
            };
            prop_assert!(err <= 1e-12, "{variant}: {err}");
        }
    }

    #[test]
    fn direct_counter_rotating_stays_in_sector(
        g in 0.001f64..0.1,
        f in schedule_strategy(),
    ) {
        let reduced = SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, g).unwrap();
        let cr = reduced.with_variant(ModelVariant::FullCounterRotating);
        let drive = Drive::direct(&f);
        let grid = TimeGrid::for_drive(0.0, f.end().unwrap() + 1.0, 64, &drive).unwrap();
        let r = propagate_piecewise(&reduced, drive, &grid, &ReducedState::designated_initial(Scenario::Direct)).unwrap();
        let full = propagate_piecewise(&cr, drive, &grid, &FullState::designated_initial(Scenario::Direct)).unwrap();
        for (a, b) in r.iter().zip(&full) {
            prop_assert!(b.out_of_sector_population() <= 1e-10);
            prop_assert!((b.to_reduced(&cr).unwrap().amplitudes() - a.amplitudes()).camax() <= 1e-10);
        }
    }

    #[test]
    fn resonant_rwa_energy_is_conserved(
        g in 0.001f64..0.1,
        cm in schedule_strategy(),
        bm in schedule_strategy(),
    ) {
        let spec = SystemSpec::resonant(Scenario::TwoStepMediated, ModelVariant::FullRwa, g).unwrap();
        let drive = Drive::mediated(&cm, &bm);
        let end = cm.end().unwrap().max(bm.end().unwrap()) + 5.0;
        let grid = TimeGrid::for_drive(0.0, end, 64, &drive).unwrap();
        let states = propagate_piecewise(&spec, drive, &grid, &FullState::designated_initial(Scenario::TwoStepMediated)).unwrap();
        let trace = energies_from_states(&spec, &states).unwrap();
        prop_assert!(trace.check_physical(&spec, 1e-10).is_ok());
    }
}
