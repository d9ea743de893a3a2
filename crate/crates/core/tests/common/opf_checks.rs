#![allow(dead_code)]

use num_complex::Complex64;
use popf_core::netcase::{parse_case, NetworkCase};
use popf_core::opf::{
    ac_power_flow, dispatch_cost, solve_acopf, solve_dcopf, FlowStatus, GenSetpoints, Injections, OpfStatus,
};

pub fn fixture(name: &str) -> NetworkCase {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_case(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub const ONE_BUS: &str = "\
mpc.baseMVA = 100;
mpc.bus = [1 3 40 0 0 0 1 1 0 230 1 1.1 0.9];
mpc.gen = [1 0 0 100 -100 1 100 1 100 0];
mpc.branch = [];
mpc.gencost = [2 0 0 3 0.01 10 0];
";

pub const ONE_BUS_TWO_GENS: &str = "\
mpc.baseMVA = 100;
mpc.bus = [1 3 50 0 0 0 1 1 0 230 1 1.1 0.9];
mpc.branch = [];
mpc.gen = [
  1 0 0 100 -100 1 100 1 30 0;
  1 0 0 100 -100 1 100 1 100 0;
];
mpc.gencost = [
  2 0 0 3 0 10 0;
  2 0 0 3 0 20 0;
];
";

// Gen voltages are pinned, so the dispatch of gen 2 is the only degree of freedom.
pub const THREE_BUS: &str = "\
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 230 1 1.0 1.0;
  2 2 0 0 0 0 1 1 0 230 1 1.0 1.0;
  3 1 100 20 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 200 -200 1 100 1 200 0;
  2 0 0 200 -200 1 100 1 40 0;
];
mpc.branch = [
  1 2 0.01 0.1 0 0 0 0 0 0 1;
  1 3 0.01 0.1 0 0 0 0 0 0 1;
  2 3 0.01 0.1 0 0 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 30 0;
  2 0 0 3 0.01 10 0;
];
";

pub const TWO_BUS_LOADED: &str = "\
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
  2 1 50 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [1 0 0 100 -100 1 100 1 200 0];
mpc.branch = [1 2 0 0.1 0 0 0 0 0 0 1];
mpc.gencost = [2 0 0 3 0.01 10 0];
";

pub fn single_bus_acopf_cost() {
    let case = parse_case(&ONE_BUS).unwrap();
    let sol = solve_acopf(&case, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!((sol.p_gen[0] - 40.0).abs() < 1e-5, "{}", sol.p_gen[0]);
    assert!((sol.cost - 416.0).abs() < 1e-4, "{}", sol.cost);
    assert_eq!(sol.theta[0], 0.0);
}

pub fn wind_covering_load_costs_nothing() {
    let case = parse_case(&ONE_BUS).unwrap();
    let inj = Injections::new().with_wind(1, 40.0, 0.0);
    let sol = solve_acopf(&case, &inj).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!(sol.p_gen[0].abs() < 1e-4, "{}", sol.p_gen[0]);
    assert!(sol.cost.abs() < 1e-3, "{}", sol.cost);
}

pub fn grid_search_three_bus(case: &NetworkCase) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut set = GenSetpoints::from_case(case);
    set.v = vec![1.0, 1.0];
    for k in 0..=4000 {
        let p2 = k as f64 * 0.01;
        set.p_mw = vec![0.0, p2];
        let pf = ac_power_flow(case, &Injections::new(), &set).unwrap();
        assert_eq!(pf.status, FlowStatus::Converged);
        let p1 = pf.p_gen[0];
        let v3 = pf.v[2];
        if !(0.0..=200.0).contains(&p1) || !(0.9..=1.1).contains(&v3) {
            continue;
        }
        let cost = dispatch_cost(case, &[p1, p2], 0.0);
        if cost < best.0 {
            best = (cost, p1, p2);
        }
    }
    best
}

pub fn three_bus_dispatch_matches_grid_search() {
    let case = parse_case(THREE_BUS).unwrap();
    let (cost, p1, p2) = grid_search_three_bus(&case);
    let sol = solve_acopf(&case, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!((sol.p_gen[1] - p2).abs() <= 0.01, "{} vs {p2}", sol.p_gen[1]);
    assert!((sol.p_gen[0] - p1).abs() <= 0.01, "{} vs {p1}", sol.p_gen[0]);
    assert!(sol.cost <= cost + 1e-6 * cost);
}

pub fn dc_two_generator_dispatch() {
    let case = parse_case(ONE_BUS_TWO_GENS).unwrap();
    let sol = solve_dcopf(&case, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!((sol.p_gen[0] - 30.0).abs() < 1e-4, "{:?}", sol.p_gen);
    assert!((sol.p_gen[1] - 20.0).abs() < 1e-4, "{:?}", sol.p_gen);
    assert!((sol.cost - 700.0).abs() < 1e-3);
}

pub fn dc_zero_load() {
    let text = ONE_BUS_TWO_GENS.replace("1 3 50 0", "1 3 0 0").replace("2 0 0 3 0 20 0", "2 0 0 3 0 20 7");
    let case = parse_case(&text).unwrap();
    let sol = solve_dcopf(&case, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!(sol.p_gen.iter().all(|p| p.abs() < 1e-5), "{:?}", sol.p_gen);
    assert!((sol.cost - 7.0).abs() < 1e-3, "{}", sol.cost);
}

pub fn dc_load_beyond_capacity_is_infeasible() {
    let case = parse_case(&ONE_BUS_TWO_GENS.replace("1 3 50 0", "1 3 131 0")).unwrap();
    let sol = solve_dcopf(&case, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Infeasible);
}

pub fn gauss_seidel_two_bus(p_load_pu: f64, x: f64) -> Complex64 {
    let y = Complex64::new(0.0, -1.0 / x);
    let (y21, y22) = (-y, y);
    let v1 = Complex64::new(1.0, 0.0);
    let s2 = Complex64::new(-p_load_pu, 0.0);
    let mut v2 = Complex64::new(1.0, 0.0);
    for _ in 0..10_000 {
        let next = ((s2 / v2).conj() - y21 * v1) / y22;
        let done = (next - v2).norm() < 1e-14;
        v2 = next;
        if done {
            break;
        }
    }
    v2
}

pub fn two_bus_angle_matches_gauss_seidel() {
    let case = parse_case(TWO_BUS_LOADED).unwrap();
    let pf = ac_power_flow(&case, &Injections::new(), &GenSetpoints::from_case(&case)).unwrap();
    let v2 = gauss_seidel_two_bus(0.5, 0.1);
    assert!((pf.theta[1] - v2.arg()).abs() < 1e-9, "{} vs {}", pf.theta[1], v2.arg());
    assert!((pf.v[1] - v2.norm()).abs() < 1e-9);
}

pub fn two_bus_loss_identity() {
    let case = parse_case(&TWO_BUS_LOADED.replace("1 2 0 0.1", "1 2 0.02 0.1")).unwrap();
    let pf = ac_power_flow(&case, &Injections::new(), &GenSetpoints::from_case(&case)).unwrap();
    let v1 = Complex64::from_polar(pf.v[0], pf.theta[0]);
    let v2 = Complex64::from_polar(pf.v[1], pf.theta[1]);
    let current = (v1 - v2) / Complex64::new(0.02, 0.1);
    let i2r = current.norm_sqr() * 0.02 * 100.0;
    let f = &pf.flows[0];
    assert!(((f.p_from + f.p_to) - i2r).abs() / 100.0 < 1e-8);
    assert!((f.p_from - (-f.p_to + i2r)).abs() / 100.0 < 1e-8);
}

pub fn power_balance_on_fixtures() {
    for name in ["case14.m", "case14_wind.m", "case118.m"] {
        let case = fixture(name);
        let pf = ac_power_flow(&case, &Injections::new(), &GenSetpoints::from_case(&case)).unwrap();
        let base = case.base_mva();
        let gen: f64 = pf.p_gen.iter().sum();
        let load: f64 = case.buses().iter().map(|b| b.p_load).sum();
        let shunt: f64 = case.buses().iter().zip(&pf.v).map(|(b, v)| b.gs * v * v).sum();
        let losses: f64 = pf.flows.iter().map(|f| f.p_from + f.p_to).sum();
        let residual = (gen - load - shunt - losses) / base;
        assert!(residual.abs() < 1e-6, "{name}: {residual}");
    }
}

/// Independent PF mismatch at a solution: S_i = V_i conj(sum_j Y_ij V_j).
pub fn mismatch(case: &NetworkCase, v: &[f64], theta: &[f64], pg: &[f64], qg: &[f64], inj: &Injections) -> f64 {
    let base = case.base_mva();
    let vc: Vec<Complex64> = v.iter().zip(theta).map(|(m, a)| Complex64::from_polar(*m, *a)).collect();
    let y = case.admittance().to_dense();
    let (pd, qd) = inj.net_demand(case).unwrap();
    let mut sinj = vec![Complex64::new(0.0, 0.0); case.n_bus()];
    for (k, g) in case.gens().iter().enumerate() {
        sinj[case.bus_index(g.bus).unwrap()] += Complex64::new(pg[k], qg[k]) / base;
    }
    let mut worst: f64 = 0.0;
    for i in 0..case.n_bus() {
        let mut cur = Complex64::new(0.0, 0.0);
        for j in 0..case.n_bus() {
            cur += y[(i, j)] * vc[j];
        }
        let s = vc[i] * cur.conj();
        let net = sinj[i] - Complex64::new(pd[i], qd[i]) / base;
        worst = worst.max((s - net).norm());
    }
    worst
}

/// Newton power flow on every fixture, checked with the dense-Y mismatch.
pub fn pf_mismatch_on_fixtures() {
    for name in ["case14.m", "case14_wind.m", "case118.m"] {
        let case = fixture(name);
        let inj = Injections::new();
        let pf = ac_power_flow(&case, &inj, &GenSetpoints::from_case(&case)).unwrap();
        assert_eq!(pf.status, FlowStatus::Converged);
        let m = mismatch(&case, &pf.v, &pf.theta, &pf.p_gen, &pf.q_gen, &inj);
        assert!(m < 1e-8, "{name}: {m}");
    }
}

pub fn acopf_case14_residuals() {
    let case = fixture("case14.m");
    let inj = Injections::new();
    let sol = solve_acopf(&case, &inj).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    assert!(sol.stats.stationarity < 1e-6);
    assert!(sol.stats.feasibility < 1e-6);
    assert!(sol.stats.complementarity < 1e-6);
    assert!(mismatch(&case, &sol.v, &sol.theta, &sol.p_gen, &sol.q_gen, &inj) < 1e-6);
    for (b, v) in case.buses().iter().zip(&sol.v) {
        assert!(*v >= b.v_min - 1e-6 && *v <= b.v_max + 1e-6);
    }
    for (g, (p, q)) in case.gens().iter().zip(sol.p_gen.iter().zip(&sol.q_gen)) {
        assert!(*p >= g.p_min - 1e-4 && *p <= g.p_max + 1e-4);
        assert!(*q >= g.q_min - 1e-4 && *q <= g.q_max + 1e-4);
    }
    let recomputed = dispatch_cost(&case, &sol.p_gen, 0.0);
    assert!(((recomputed - sol.cost) / sol.cost).abs() < 1e-9);
    assert_eq!(sol.theta[case.slack_index()], 0.0);
    // MATPOWER/pypower reference value for the IEEE 14-bus AC-OPF
    assert!(((sol.cost - 8081.526392989471) / 8081.526392989471).abs() < 1e-6, "{}", sol.cost);
}

pub fn opf_reference_costs() {
    let c14 = fixture("case14.m");
    let dc = solve_dcopf(&c14, &Injections::new()).unwrap();
    assert!(((dc.cost - 7642.5937349395335) / 7642.5937349395335).abs() < 1e-6, "{}", dc.cost);
    let c118 = fixture("case118.m");
    let ac = solve_acopf(&c118, &Injections::new()).unwrap();
    assert_eq!(ac.status, OpfStatus::Optimal);
    assert!(((ac.cost - 129660.68639034452) / 129660.68639034452).abs() < 1e-6, "{}", ac.cost);
    let dc = solve_dcopf(&c118, &Injections::new()).unwrap();
    assert!(((dc.cost - 125947.87267940753) / 125947.87267940753).abs() < 1e-6, "{}", dc.cost);
}

/// Pin one control at `value` and re-solve: the best cost over the restricted
/// set may not beat the unrestricted optimum.
pub fn resolve_pinned(case: &NetworkCase, gen: usize, p: Option<f64>, v: Option<f64>) -> f64 {
    let (base, mut buses, branches, mut gens) = case.clone().into_parts();
    if let Some(p) = p {
        gens[gen].p_min = p;
        gens[gen].p_max = p;
    }
    if let Some(v) = v {
        let bi = case.bus_index(gens[gen].bus).unwrap();
        buses[bi].v_min = v;
        buses[bi].v_max = v;
    }
    let pinned = NetworkCase::new(base, buses, branches, gens).unwrap();
    let sol = solve_acopf(&pinned, &Injections::new()).unwrap();
    assert_eq!(sol.status, OpfStatus::Optimal);
    sol.cost
}

pub fn acopf_local_optimality_probe() {
    let case = fixture("case14.m");
    let sol = solve_acopf(&case, &Injections::new()).unwrap();
    let mut probes = 0;
    for (k, g) in case.gens().iter().enumerate() {
        let bi = case.bus_index(g.bus).unwrap();
        let b = &case.buses()[bi];
        for delta in [-1e-3, 1e-3] {
            let p = sol.p_gen[k] + delta * case.base_mva();
            if bi != case.slack_index() && p >= g.p_min && p <= g.p_max {
                let cost = resolve_pinned(&case, k, Some(p), None);
                assert!(cost >= sol.cost - 1e-6, "gen {k} dP {delta}: {cost} < {}", sol.cost);
                probes += 1;
            }
            let v = sol.v[bi] + delta;
            if v >= b.v_min && v <= b.v_max {
                let cost = resolve_pinned(&case, k, None, Some(v));
                assert!(cost >= sol.cost - 1e-6, "gen {k} dV {delta}: {cost} < {}", sol.cost);
                probes += 1;
            }
        }
    }
    assert!(probes >= 8, "{probes}");
}

pub fn dc_close_to_ac_on_lossless_light_case() {
    let (base, mut buses, mut branches, gens) = fixture("case14.m").into_parts();
    for b in &mut buses {
        b.p_load *= 0.3;
        b.q_load *= 0.3;
        b.gs = 0.0;
        b.bs = 0.0;
    }
    for br in &mut branches {
        br.r = 0.0;
        br.b_charging = 0.0;
        br.tap = 1.0;
    }
    let case = NetworkCase::new(base, buses, branches, gens).unwrap();
    let ac = solve_acopf(&case, &Injections::new()).unwrap();
    let dc = solve_dcopf(&case, &Injections::new()).unwrap();
    assert_eq!(ac.status, OpfStatus::Optimal);
    let rel = (dc.cost - ac.cost).abs() / ac.cost;
    assert!(rel < 0.02, "dc {} ac {} rel {rel}", dc.cost, ac.cost);
}

pub fn solves_are_bit_identical() {
    let case = fixture("case14_wind.m");
    let inj = Injections::new().with_wind(3, 20.0, 6.5).with_wind(4, 10.0, 3.2).with_load(9, 31.0, 17.4);
    let a = solve_acopf(&case, &inj).unwrap();
    let b = solve_acopf(&case, &inj).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let a = solve_dcopf(&case, &inj).unwrap();
    let b = solve_dcopf(&case, &inj).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
