// Temporary development probe; removed before release.
use ruin_alarm::compare::*;
use ruin_alarm::model::{CapitalSchedule, ClaimDistribution, InjectionEvent, RiskModel};
use ruin_alarm::simulate::time_grid;

fn main() {
    let ex2 = RiskModel::new(ClaimDistribution::Pareto { scale: 1.0, shape: 0.95 }, 20.0, 40.0, 50.0, 0.0).unwrap();
    let sched = CapitalSchedule::new(50.0, vec![
        InjectionEvent { time: 0.29, amount: 5.0 },
        InjectionEvent { time: 0.58, amount: 5.0 },
        InjectionEvent { time: 0.91, amount: 5.0 },
        InjectionEvent { time: 1.28, amount: 5.0 },
    ], None).unwrap();
    let grid = time_grid(7.0, 0.01);
    let rates = [0.0, 0.10, 0.30, 0.50, 1.0, 1.5, 2.0, 5.0, f64::INFINITY];
    let rep = survival_table(&ex2, &sched, &rates, &grid, 100_000, 42).unwrap();
    println!("equiv capitals: {:?}", rep.equivalent_capitals.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    for t in [0.01, 0.1, 0.2, 0.3, 1.0, 3.0, 7.0] {
        let ti = rep.time_index(t).unwrap();
        println!("t={t:5}: alarm={:.3}  r0={:.3}  r10={:.3}  rinf={:.3}  delta_r0={:+.4}+-{:.4}",
            rep.survival_alarm[ti], rep.survival_noalarm[0][ti], rep.survival_noalarm[1][ti],
            rep.survival_noalarm[8][ti], rep.delta[0][ti], rep.delta_stderr[0][ti]);
    }
    // Pre-alarm delta <= beta check at t=0.2 for r=10%.
    let (d, se) = rep.delta_at(1, 0.2).unwrap();
    println!("delta(0.2, r=10%)={d:.4}+-{se:.4} beta=0.225");
    println!("crossovers: {:?}", rep.rates.iter().zip(&rep.crossover_times).collect::<Vec<_>>());
    // paper: r=150% crossover by A3=0.91.
}
