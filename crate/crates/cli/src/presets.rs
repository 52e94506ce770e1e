//! Named configurations for the standard lattice setups.

use crate::config::{
    AnalysisConfig, EngineConfig, Observable, OutputConfig, Propagator, RunConfig, ScanAxis,
    ScanConfig, ScheduleConfig, SystemConfig, WindowChoice,
};

const NAMES: [&str; 8] = [
    "triple-well-double-pulse",
    "triple-well-breathing",
    "triple-well-plateaus",
    "triple-well-pulse-width",
    "triple-well-excitation",
    "eightwell-momentum",
    "eightwell-fidelity",
    "smoke",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

fn triple_well(orbitals: usize) -> SystemConfig {
    SystemConfig {
        particles: 4,
        wells: 3,
        depth: 10.0,
        orbitals,
        grid_points: None,
        kinetic_prefactor: fewboson::lattice::DEFAULT_KINETIC,
        bands: None,
    }
}

fn eight_well(particles: usize) -> SystemConfig {
    SystemConfig {
        particles,
        wells: 8,
        depth: 10.0,
        orbitals: 16,
        grid_points: None,
        kinetic_prefactor: fewboson::lattice::DEFAULT_KINETIC,
        bands: None,
    }
}

/// Krylov for the large basis; the mean-field step passes its dt/2 check
/// over the full five-pulse train only below about 0.0025.
fn eight_well_engine() -> EngineConfig {
    EngineConfig {
        propagator: Propagator::Krylov,
        mf_dt: 0.002,
        ..EngineConfig::default()
    }
}

fn schedule(g_f: f64, tau: f64, pulses: usize) -> ScheduleConfig {
    ScheduleConfig {
        g_in: 0.1,
        g_f,
        tau,
        pulses,
        t_end: None,
        sample_dt: 0.1,
    }
}

fn outputs(observables: &[Observable]) -> OutputConfig {
    OutputConfig {
        observables: observables.to_vec(),
        ..OutputConfig::default()
    }
}

fn analysis(series: &str, column: &str) -> AnalysisConfig {
    AnalysisConfig {
        series: series.into(),
        column: column.into(),
        ..AnalysisConfig::default()
    }
}

fn scan(axis: ScanAxis, values: &[f64]) -> Option<ScanConfig> {
    Some(ScanConfig {
        axis,
        values: values.to_vec(),
    })
}

/// `count` values `start, start + step, ...`, rounded to avoid drift in the
/// directory names.
fn ramp(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e6).round() / 1e6)
        .collect()
}

pub fn preset(name: &str) -> Option<RunConfig> {
    use Observable::*;
    let cfg = match name {
        // double pulse, fidelity and number-state classes
        "triple-well-double-pulse" => RunConfig {
            system: triple_well(9),
            schedule: schedule(3.4, 50.0, 2),
            engine: EngineConfig::default(),
            outputs: outputs(&[Fidelity, Classes, Bands, Natural]),
            scan: scan(ScanAxis::GFinal, &ramp(0.2, 0.2, 20)),
            analysis: analysis("fidelity", "F"),
        },
        // single quench, cradle and breathing modes
        "triple-well-breathing" => RunConfig {
            system: triple_well(9),
            schedule: schedule(3.0, 50.0, 1),
            engine: EngineConfig::default(),
            outputs: outputs(&[Fidelity, Cradle, Breathing, Natural]),
            scan: scan(ScanAxis::GFinal, &ramp(0.5, 0.5, 8)),
            analysis: analysis("breathing", "sigma2"),
        },
        "triple-well-plateaus" => RunConfig {
            system: triple_well(9),
            schedule: schedule(1.0, 25.0, 5),
            engine: EngineConfig::default(),
            outputs: outputs(&[Fidelity, Bands, Natural]),
            scan: scan(ScanAxis::GFinal, &[1.6, 2.6, 3.6]),
            analysis: analysis("bands", "P_b0_n4"),
        },
        "triple-well-pulse-width" => RunConfig {
            system: triple_well(9),
            schedule: schedule(1.0, 8.5, 5),
            engine: EngineConfig::default(),
            outputs: outputs(&[Fidelity, Bands, Natural]),
            scan: scan(ScanAxis::Tau, &[2.0, 8.5, 10.0]),
            analysis: analysis("bands", "P_b0_n4"),
        },
        "triple-well-excitation" => RunConfig {
            system: triple_well(9),
            schedule: schedule(4.0, 8.5, 5),
            engine: EngineConfig::default(),
            outputs: outputs(&[Bands, Natural]),
            scan: scan(ScanAxis::Tau, &[2.0, 8.5, 10.0]),
            analysis: analysis("bands", "P_b2_n1"),
        },
        "eightwell-momentum" => RunConfig {
            system: eight_well(5),
            schedule: schedule(1.0, 25.0, 5),
            engine: eight_well_engine(),
            outputs: outputs(&[Fidelity, Momentum, Natural]),
            scan: scan(ScanAxis::GFinal, &ramp(0.5, 0.5, 6)),
            analysis: analysis("momentum_peaks", "n_center"),
        },
        "eightwell-fidelity" => RunConfig {
            system: eight_well(3),
            schedule: schedule(3.0, 50.0, 5),
            engine: eight_well_engine(),
            outputs: outputs(&[Fidelity, Natural]),
            scan: None,
            analysis: AnalysisConfig {
                windows: WindowChoice::Positive,
                ..analysis("fidelity", "F")
            },
        },
        "smoke" => RunConfig {
            system: SystemConfig {
                particles: 2,
                ..triple_well(6)
            },
            schedule: schedule(1.0, 25.0, 1),
            engine: EngineConfig::default(),
            outputs: outputs(&[
                Fidelity, Bands, Classes, Cradle, Breathing, Momentum, Natural,
            ]),
            scan: scan(ScanAxis::GFinal, &[0.5, 1.0, 1.5]),
            analysis: analysis("fidelity", "F"),
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_presets() {
        let c = preset("triple-well-double-pulse").unwrap();
        assert_eq!(
            (c.system.particles, c.system.wells, c.system.depth),
            (4, 3, 10.0)
        );
        assert_eq!(
            (c.schedule.g_in, c.schedule.tau, c.schedule.pulses),
            (0.1, 50.0, 2)
        );
        let e = preset("eightwell-momentum").unwrap();
        assert_eq!(
            (e.system.particles, e.system.wells, e.system.depth),
            (5, 8, 10.0)
        );
        assert_eq!(
            (e.schedule.g_in, e.schedule.tau, e.schedule.pulses),
            (0.1, 25.0, 5)
        );
        assert!(preset("nope").is_none());
    }

    #[test]
    fn all_presets_validate() {
        for name in names() {
            preset(name).unwrap().validate().unwrap();
        }
    }
}
