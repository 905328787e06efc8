#![allow(dead_code)]

use cfgloc::encoder::encode_checked;
use cfgloc::harness::sim::{assignments, satisfied, simulate};
use cfgloc::harness::Case;
use cfgloc::solver::CheckResult;

/// Compares every forwarding variable of every requirement's encoding with
/// the simulator, for all assignments with up to two failed links. Returns
/// the number of (requirement, assignment) pairs compared.
pub fn compare_with_simulator(name: &str, case: &Case) -> Result<usize, String> {
    let links = case.net.topology.links.len();
    let mut n = 0;
    for req in &case.requirements {
        let req = req.with_max_failures(2.min(links));
        let mut cs = encode_checked(&case.net, &req).map_err(|e| e.to_string())?;
        cs.audit_separation()?;
        cs.audit_symbols()?;
        let tc = req.traffic_class(&case.net.topology);
        for failed in assignments(links, 2) {
            let mut labels = cs.config_labels();
            labels.extend(&cs.logic_labels);
            labels.extend(cs.pin_labels(&failed));
            let model = match cs.sys.check(&labels).map_err(|e| e.to_string())? {
                CheckResult::Sat(m) => m,
                other => return Err(format!("{name} {} {failed:?}: {other:?}", req.id)),
            };
            let sim = simulate(&case.net, &failed, &tc);
            let at = |what: String| format!("{name} {} {failed:?}: {what}", req.id);
            for ((r, h), &t) in &cs.nh_vars {
                if cs.holds(&model, t) != (sim.next_hop[r].as_deref() == Some(h.as_str())) {
                    return Err(at(format!("nh {r}->{h}")));
                }
            }
            for ((r, h), &t) in &cs.fwd_vars {
                if cs.holds(&model, t) != sim.fwd[&(r.clone(), h.clone())] {
                    return Err(at(format!("fwd {r}->{h}")));
                }
            }
            for (r, &t) in &cs.local_vars {
                if cs.holds(&model, t) != sim.local[r] {
                    return Err(at(format!("local {r}")));
                }
            }
            for (r, &t) in &cs.reach_vars {
                if cs.holds(&model, t) != sim.reach[r] {
                    return Err(at(format!("reach {r}")));
                }
            }
            n += 1;
        }
    }
    Ok(n)
}

/// Assignments within `k` failures that violate `req`, by brute force.
pub fn violating(case: &Case, req: &cfgloc::requirements::Requirement) -> Vec<Vec<bool>> {
    assignments(case.net.topology.links.len(), req.max_failures)
        .into_iter()
        .filter(|a| !satisfied(&case.net, req, a))
        .collect()
}
