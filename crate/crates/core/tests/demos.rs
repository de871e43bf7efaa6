use carleman_core::assembly::ClosureMode;
use carleman_core::demos::{self, Demo1Params, DEMO1_T_SPAN, DEMO1_X_INIT};
use carleman_core::integrate::{solve_jacobian_euler, solve_lifted_euler};
use carleman_core::metrics::gain;
use carleman_core::sweep::{run_sweep, Method, SweepConfig, SweepOverrides, SystemSource};

fn sweep(demo: &str, deg_z: Vec<u32>, n_eval: Vec<usize>) -> carleman_core::sweep::SweepResult {
    let (cfg, loaded) = SweepConfig::resolve(SweepOverrides {
        system: Some(SystemSource::Demo(demo.into())),
        deg_z: Some(deg_z),
        n_eval: Some(n_eval),
        ..SweepOverrides::default()
    })
    .unwrap();
    run_sweep(&cfg, &loaded).unwrap()
}

#[test]
fn demo1_x_channel_against_closed_form() {
    let p = Demo1Params::default();
    let op = demos::build_demo1(&p);
    let mut prev = f64::INFINITY;
    for n_steps in [100, 200, 400] {
        for traj in [
            solve_jacobian_euler(&op, &DEMO1_X_INIT, DEMO1_T_SPAN, n_steps).unwrap(),
            solve_lifted_euler(&op, &DEMO1_X_INIT, DEMO1_T_SPAN, n_steps, 4, ClosureMode::Drop).unwrap(),
        ] {
            let err = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(t, x)| (x[0] - demos::demo1_x_exact(&p, DEMO1_X_INIT, *t)).abs())
                .fold(0.0f64, f64::max);
            assert!(err < 5.0 / n_steps as f64, "n_steps={n_steps}: {err}");
        }
        let lifted = solve_lifted_euler(&op, &DEMO1_X_INIT, DEMO1_T_SPAN, n_steps, 3, ClosureMode::Drop).unwrap();
        let last = lifted.last_state().unwrap()[0];
        let err = (last - demos::demo1_x_exact(&p, DEMO1_X_INIT, DEMO1_T_SPAN.1)).abs();
        assert!(err < prev);
        prev = err;
    }
}

#[test]
fn demo1_default_sweep_and_gain() {
    let res = sweep("demo1", vec![3, 4, 5], vec![101, 201]);
    for m in [Method::Jacobian, Method::Lifted { q: 3 }, Method::Lifted { q: 4 }, Method::Lifted { q: 5 }] {
        let coarse = res.error(m, 101).unwrap();
        let fine = res.error(m, 201).unwrap();
        assert!(fine < coarse, "{m}");
    }
    let jac = res.reports(Method::Jacobian);
    let tol = 2.0 * res.error(Method::Jacobian, 201).unwrap();
    for q in [3, 4, 5] {
        let r = gain(&res.reports(Method::Lifted { q }), &jac, tol);
        // Regime-dependent; reported, not asserted.
        println!("demo1 R(e={tol:.3e}) for Q={q}: {r:?}");
    }
}

#[test]
fn demo2_fine_grids_merge() {
    let res = sweep("demo2", vec![2, 3, 4], vec![10001]);
    let errs: Vec<f64> = res.cells.iter().map(|c| c.report().unwrap().max_error).collect();
    let lo = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = errs.iter().cloned().fold(0.0, f64::max);
    assert!(hi <= 5.0 * lo, "{errs:?}");
}

#[test]
fn demo2_lifted_beats_jacobian_on_coarsest_grid() {
    let res = sweep("demo2", vec![2, 3, 4], vec![11]);
    let jac = res.error(Method::Jacobian, 11).unwrap();
    for q in [2, 3, 4] {
        assert!(res.error(Method::Lifted { q }, 11).unwrap() < jac);
    }
}
