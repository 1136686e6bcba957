//! Shared fixtures for the benchmarks.

use qbtransfer::{
    make_protocol_schedule, ModelVariant, ProtocolSchedule, Scenario, SystemSpec, TauChoice,
    TimeGrid,
};

pub const G: f64 = 0.05;

/// A resonant system, its first-maximum protocol and a grid covering the
/// protocol plus a quarter of its length.
pub struct Fixture {
    pub spec: SystemSpec,
    pub protocol: ProtocolSchedule,
    pub grid: TimeGrid,
}

pub fn fixture(scenario: Scenario, variant: ModelVariant, n_samples: usize) -> Fixture {
    let sigma = (scenario == Scenario::TwoStepMediated).then_some(2.5 / G);
    let spec = SystemSpec::resonant(scenario, variant, G).expect("valid system");
    let protocol = make_protocol_schedule(scenario, G, TauChoice::FirstMaximum, sigma)
        .expect("valid protocol");
    let grid = TimeGrid::for_drive(0.0, 1.25 * protocol.end(), n_samples, &protocol.drive())
        .expect("valid grid");
    Fixture {
        spec,
        protocol,
        grid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        for scenario in Scenario::ALL {
            let f = fixture(scenario, ModelVariant::FullRwa, 11);
            assert!(f.grid.len() >= 11);
            assert_eq!(f.spec.scenario(), scenario);
        }
    }
}
