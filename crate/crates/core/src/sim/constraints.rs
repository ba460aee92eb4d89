use serde::{Deserialize, Serialize};

use super::env::Scenario;
use super::log::EpisodeLog;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Stored energy outside `[soc_min, soc_max]`.
    SocBounds,
    /// Demand exceeded what renewables, battery and grid could jointly supply.
    SupplyAdequacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Audit a finished episode against the state-of-charge bounds and the
/// supply-adequacy constraint.
///
/// Adequacy uses the battery's deliverable power,
/// `min(max_discharge, eta_d * (soc - soc_min) / dt)`, rather than raw
/// stored energy. A step that left demand unserved is always reported.
/// Never fails: problems are returned as a list.
pub fn validate_constraints(log: &EpisodeLog, scenario: &Scenario) -> Vec<Violation> {
    let b = &scenario.battery;
    let s = &scenario.series;
    let dt = s.timestep_hours;
    let mut out = Vec::new();

    let check_soc = |t: usize, soc: f64, out: &mut Vec<Violation>| {
        if soc < b.soc_min_kwh - TOL || soc > b.soc_max_kwh + TOL {
            out.push(Violation {
                t,
                kind: ViolationKind::SocBounds,
                detail: format!(
                    "soc {soc} outside [{}, {}]",
                    b.soc_min_kwh, b.soc_max_kwh
                ),
            });
        }
    };

    for (i, rec) in log.steps.iter().enumerate() {
        let t = rec.state.t;
        check_soc(t, rec.state.soc_kwh, &mut out);

        let o = &rec.outcome;
        let (renewable_kw, cap_kw, demand_kw) = if t < s.len() {
            (s.solar_kw[t] + s.wind_kw[t], s.grid_cap_kw[t], s.demand_kw[t])
        } else {
            (o.renewable_kwh / dt, f64::INFINITY, o.demand_kwh / dt)
        };
        let battery_kw = b
            .max_discharge_kw
            .min(b.discharge_eff * (rec.state.soc_kwh - b.soc_min_kwh).max(0.0) / dt);
        let supply_kw = renewable_kw + battery_kw + cap_kw;
        if o.unserved_kwh > TOL || demand_kw > supply_kw + TOL {
            out.push(Violation {
                t,
                kind: ViolationKind::SupplyAdequacy,
                detail: format!(
                    "demand {:.6} kWh, unserved {:.6} kWh, available supply {:.6} kW",
                    o.demand_kwh, o.unserved_kwh, supply_kw
                ),
            });
        }

        // The state after the final step is not logged as a pre-step state.
        if i + 1 == log.steps.len() {
            let soc_after = rec.state.soc_kwh + b.charge_eff * o.charge_kwh
                - o.discharge_kwh / b.discharge_eff;
            check_soc(t + 1, soc_after, &mut out);
        }
    }
    out
}
