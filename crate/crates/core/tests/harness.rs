use std::path::Path;

use xilearn::agents::AgentKind;
use xilearn::approx::ValueStore;
use xilearn::envs::TabularGridworld;
use xilearn::harness::{plot_data, run, run_repetition, sample_tasks, sweep, Grid, RunConfig, RunRecord, TaskRow};
use xilearn::oracle::value_iteration;
use xilearn::{Error, StateVec};

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

const SMALL_XI: &str = "env = \"object\"\nagent = \"Xi\"\nreward_kind = \"general\"\nnum_tasks = 3\nsteps_per_task = 800\nrepetitions = 2\nseed = 4\n";

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(SMALL_XI);
    let mut outputs = Vec::new();
    for k in 0..2 {
        c.output_dir = Some(dir.path().join(format!("run{k}")));
        run(&c).unwrap();
        let out = c.output_dir.as_ref().unwrap();
        assert!(out.join("timing.csv").exists() && out.join("meta.json").exists());
        outputs.push(std::fs::read(out.join("records.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("agent,seed,repetition,task_index,avg_reward_per_step,total_task_return,cumulative_return\n"));
}

#[test]
fn cumulative_is_exact_prefix_sum() {
    let record = run(&cfg(SMALL_XI)).unwrap();
    for rep in 0..2 {
        let rows: Vec<&TaskRow> = record.rows.iter().filter(|r| r.repetition == rep).collect();
        let mut acc = 0.0;
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.task_index, i);
            acc += r.total_task_return;
            assert_eq!(r.cumulative_return, acc);
        }
    }
}

#[test]
fn agents_see_the_same_tasks() {
    for env in ["object", "racer"] {
        let budget = if env == "racer" { "episodes_per_task = 1" } else { "steps_per_task = 10" };
        let tasks: Vec<_> = ["QL", "SFQL", "Xi", "CXi"]
            .iter()
            .filter(|a| if env == "racer" { **a != "Xi" } else { **a != "CXi" })
            .map(|a| {
                let mode = if *a == "SFQL" && env == "racer" { "prefit_linear" } else { "given" };
                let c = cfg(&format!("env = \"{env}\"\nagent = \"{a}\"\nreward_mode = \"{mode}\"\nnum_tasks = 5\n{budget}\nseed = 9\n"));
                sample_tasks(&c, 1).unwrap()
            })
            .collect();
        assert!(tasks.windows(2).all(|w| w[0] == w[1]), "{env}");
    }
}

fn tabular_ql() -> RunConfig {
    cfg("env = \"tabular\"\nagent = \"QL\"\nnum_tasks = 1\nsteps_per_task = 200000\nseed = 2\n\
         [hyperparams]\nalpha = 1.0\nepsilon = 1.0\ngamma = 0.9\n\
         [tabular]\nschedule = { kind = \"robbins_monro\", c = 1000.0 }\n")
}

#[test]
fn tabular_q_learning_finds_the_optimal_policy() {
    let c = tabular_ql();
    let tasks = sample_tasks(&c, 0).unwrap();
    let rep = run_repetition(&c, 0, &tasks).unwrap();
    let model = TabularGridworld::new(4, 4).model(0.9);
    let opt = value_iteration(&model, &tasks[0], 1e-12);
    let ValueStore::Tabular(t) = &rep.agent.library().entry(0).values else { panic!("tabular store") };
    let live: Vec<usize> = (0..16).filter(|&s| !model.is_terminal(s)).collect();
    let agree = live
        .iter()
        .filter(|&&s| {
            let row: Vec<f64> = (0..4).map(|a| t.values(s, a)[0]).collect();
            let g = xilearn::greedy_index(&row);
            (0..4).all(|b| opt.q(s, g) >= opt.q(s, b) - 1e-9)
        })
        .count();
    assert!(agree as f64 >= 0.95 * live.len() as f64, "{agree}/{}", live.len());
}

#[test]
fn xi_acts_on_reward_weighted_xi() {
    let c = cfg("env = \"object\"\nagent = \"Xi\"\nreward_kind = \"general\"\nnum_tasks = 2\nsteps_per_task = 300\nseed = 5\n");
    let tasks = sample_tasks(&c, 0).unwrap();
    let mut rep = run_repetition(&c, 0, &tasks).unwrap();
    let agent = &mut rep.agent;
    let xilearn::agents::OutputLayout::Atoms(atoms) = agent.layout().clone() else { panic!("atom layout") };
    let r: Vec<f64> = atoms.atoms().iter().map(|phi| tasks[1].reward(phi)).collect();
    let mut state = vec![0.0; 100];
    state[44] = 0.6;
    state[45] = 0.3;
    let s = StateVec(state);
    let q = agent.q_values(&s);
    for (a, qa) in q.iter().enumerate() {
        let xi = agent.library().entry(1).values.predict(&s, a);
        let expect: f64 = xi.iter().zip(&r).map(|(x, y)| x * y).sum();
        assert!((qa - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }
}

#[test]
fn sweep_winner_ignores_cell_order() {
    let mut base = tabular_ql();
    base.steps_per_task = Some(3000);
    base.hyperparams.epsilon = 0.15;
    base.repetitions = 2;
    let rates = vec![0.05, 0.2, 0.6, 1.0];
    let forward = sweep(&base, &Grid { alpha: Some(rates.clone()), ..Default::default() }).unwrap();
    let backward = sweep(&base, &Grid { alpha: Some(rates.into_iter().rev().collect()), ..Default::default() }).unwrap();
    assert_eq!(forward.best_cell().hyperparams, backward.best_cell().hyperparams);
    assert_eq!(forward.best_cell().mean_total_return, backward.best_cell().mean_total_return);
}

#[test]
fn standard_grids() {
    let xi = cfg("env = \"object\"\nagent = \"Xi\"\nnum_tasks = 1\nsteps_per_task = 1\n");
    assert_eq!(Grid::standard(&xi).cells(&xi.hyperparams).len(), 3);
    let mb = cfg("env = \"object\"\nagent = \"MBXi\"\nreward_mode = \"online\"\nnum_tasks = 1\nsteps_per_task = 1\n");
    assert_eq!(Grid::standard(&mb).cells(&mb.hyperparams).len(), 27);
    let one = Grid { alpha: Some(vec![0.3]), ..Default::default() };
    let cells = one.cells(&xi.hyperparams);
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].alpha, 0.3);
    assert_eq!(AgentKind::Xi.name(), "Xi");
}

fn write_record(dir: &Path, name: &str, agent: &str, totals_by_rep: &[&[f64]]) {
    let mut rows = Vec::new();
    for (rep, totals) in totals_by_rep.iter().enumerate() {
        let mut acc = 0.0;
        for (i, &t) in totals.iter().enumerate() {
            acc += t;
            rows.push(TaskRow {
                agent: agent.into(),
                seed: 0,
                repetition: rep,
                task_index: i,
                avg_reward_per_step: t / 10.0,
                total_task_return: t,
                cumulative_return: acc,
            });
        }
    }
    std::fs::create_dir_all(dir).unwrap();
    RunRecord { rows, timing: Vec::new() }.write_csv(&dir.join(name)).unwrap();
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn plot_single_seed_has_zero_sem() {
    let dir = tempfile::tempdir().unwrap();
    write_record(&dir.path().join("in"), "records.csv", "Xi", &[&[1.0, 2.0, 4.0]]);
    plot_data(&dir.path().join("in"), &dir.path().join("out"), 1).unwrap();
    let (header, rows) = read_table(&dir.path().join("out/returns.csv"));
    assert_eq!(header, ["task_index", "Xi_mean", "Xi_sem"]);
    assert_eq!(rows.iter().map(|r| r[1]).collect::<Vec<_>>(), [1.0, 2.0, 4.0]);
    assert!(rows.iter().all(|r| r[2] == 0.0));
    let (_, cum) = read_table(&dir.path().join("out/cumulative.csv"));
    assert_eq!(cum.iter().map(|r| r[1]).collect::<Vec<_>>(), [1.0, 3.0, 7.0]);
}

#[test]
fn plot_two_seeds_mean_and_sem() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_record(&input.join("xi"), "records.csv", "Xi", &[&[1.0, 0.0], &[3.0, 0.0]]);
    write_record(&input.join("ql"), "records.csv", "QL", &[&[5.0, 5.0]]);
    write_record(&input.join("sfql"), "records.csv", "SFQL", &[&[2.0, 2.0], &[2.0, 2.0], &[2.0, 2.0]]);
    plot_data(&input, &dir.path().join("out"), 1).unwrap();
    let (header, rows) = read_table(&dir.path().join("out/returns.csv"));
    assert_eq!(header.len(), 1 + 2 * 3);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows[0][col("Xi_mean")], 2.0);
    assert_eq!(rows[0][col("Xi_sem")], 1.0);
}

#[test]
fn plot_rejects_mismatched_task_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_record(&input.join("a"), "records.csv", "Xi", &[&[1.0, 2.0]]);
    write_record(&input.join("b"), "records.csv", "Xi", &[&[1.0, 2.0, 3.0]]);
    let err = plot_data(&input, &dir.path().join("out"), 1).unwrap_err();
    assert!(matches!(err, Error::TaskCountMismatch(_, _)), "{err}");
}

#[test]
fn bad_config_is_rejected() {
    assert!(RunConfig::from_toml("env = \"object\"\nagent = \"CXi\"\nnum_tasks = 1\n").is_err());
    assert!(RunConfig::from_toml("env = \"object\"\nagent = \"Xi\"\nnum_tasks = 1\nsteps_per_task = 5\nbogus = 1\n").is_err());
}
