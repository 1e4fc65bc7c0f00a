use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use graphnav::envgen::SpawnRules;
use graphnav::harness::{
    aggregate_metrics, class_plot_rows, curve_plot_rows, emit_plot_data, evaluate, export_results,
    pretrain_agent_init, read_records_csv, run_unseen_class_suite, train_agents, training_bundle, write_curve_csv,
    Agent, EvalMode, ExperimentConfig, GroupBy, PlotRow, PolicyKind,
};
use graphnav::policynet::PolicyParams;

use crate::{settings, Common, Failure};

const CURVE_WINDOW: usize = 100;

type Outcome = Result<(), Failure>;

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn prepare(common: &Common) -> Result<ExperimentConfig, Failure> {
    let config =
        settings::load(common.config.as_deref(), &common.sets, common.seed).map_err(Failure::Config)?;
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))
        .map_err(runtime)?;
    write(&common.out.join("config.toml"), &settings::to_toml(&config).map_err(runtime)?)?;
    Ok(config)
}

fn write(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

fn agent_name(m: usize, a: usize) -> String {
    format!("m{m:03}_a{a:03}")
}

fn rules(config: &ExperimentConfig) -> Result<SpawnRules, Failure> {
    config.env.rules().map_err(|e| Failure::Config(e.into()))
}

pub fn gen_env(common: &Common) -> Outcome {
    let config = prepare(common)?;
    let rules = rules(&config)?;
    let dir = common.out.join("bundles");
    std::fs::create_dir_all(&dir).map_err(runtime)?;
    write(&common.out.join("spawn_pairs.txt"), &rules.to_text())?;
    for m in 0..config.eval.n_spawn_models {
        for a in 0..config.eval.n_agents_per_model {
            let bundle = training_bundle(config.seed, &config.env.map, &rules, m, a)?;
            let name = agent_name(m, a);
            write(&dir.join(format!("{name}.map")), &bundle.map.to_text())?;
            write(&dir.join(format!("{name}.spawn")), &bundle.model.to_text())?;
        }
    }
    Ok(())
}

pub fn pretrain(common: &Common) -> Outcome {
    let config = prepare(common)?;
    let (vocab, table) = config.embeddings.build()?;
    let (params, losses) = pretrain_agent_init(&config, &vocab, &table)?;
    write(&common.out.join("pretrained.ckpt"), &params.to_checkpoint())?;
    let mut text = String::from("batch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        text.push_str(&format!("{},{l:?}\n", i + 1));
    }
    write(&common.out.join("pretrain_loss.csv"), &text)?;
    eprintln!("pretrained {} batches", losses.len());
    Ok(())
}

fn read_checkpoint(path: &Path) -> Result<PolicyParams, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)?;
    PolicyParams::from_checkpoint(&text)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(runtime)
}

pub fn train(common: &Common, init: Option<&Path>) -> Outcome {
    let config = prepare(common)?;
    let (_, table) = config.embeddings.build()?;
    let rules = rules(&config)?;
    let init = init.map(read_checkpoint).transpose()?;
    let agents_dir = common.out.join("agents");
    let curves_dir = common.out.join("curves");
    for d in [&agents_dir, &curves_dir] {
        std::fs::create_dir_all(d).map_err(runtime)?;
    }
    let every = config.checkpoint_every;
    let mut io_error: Option<Failure> = None;
    let trained = train_agents(&config, &table, &rules, init.as_ref(), |(m, a), stats, params| {
        let done = stats.episode + 1;
        if every > 0 && done % every == 0 && io_error.is_none() {
            let path = agents_dir.join(format!("{}_ep{done:07}.ckpt", agent_name(m, a)));
            if let Err(e) = write(&path, &params.to_checkpoint()) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let mut plot: Vec<PlotRow> = Vec::new();
    for (agent, curve) in &trained {
        let name = agent_name(agent.spawn_model_id, agent.agent_id);
        write(&agents_dir.join(format!("{name}.ckpt")), &agent.params.to_checkpoint())?;
        write_curve_csv(&curves_dir.join(format!("{name}.csv")), curve)?;
        plot.extend(curve_plot_rows(&name, curve, CURVE_WINDOW));
        eprintln!(
            "{name}: {} episodes, final rolling success {:.3}",
            curve.len(),
            curve.final_success(CURVE_WINDOW)
        );
    }
    emit_plot_data(&common.out.join("training_plot.csv"), &plot)?;
    Ok(())
}

/// Evaluates all policies when `agents_dir` is given, otherwise only the
/// baselines with untrained placeholder parameters.
pub fn eval(common: &Common, agents_dir: Option<&Path>, mode: Option<EvalMode>) -> Outcome {
    let mut common = common.clone();
    if let Some(mode) = mode {
        common.sets.push(format!("eval.mode=\"{}\"", mode.name()));
    }
    let config = prepare(&common)?;
    let (vocab, table) = config.embeddings.build()?;
    let rules = rules(&config)?;
    let mut agents = Vec::new();
    for m in 0..config.eval.n_spawn_models {
        for a in 0..config.eval.n_agents_per_model {
            let params = match agents_dir {
                Some(dir) => {
                    let path: PathBuf = dir.join("agents").join(format!("{}.ckpt", agent_name(m, a)));
                    let p = read_checkpoint(&path)?;
                    if p.feature_dim() != table.dim() {
                        return Err(Failure::Config(anyhow!(
                            "{} has feature dim {} but embeddings.dim is {}",
                            path.display(),
                            p.feature_dim(),
                            table.dim()
                        )));
                    }
                    p
                }
                None => PolicyParams::zeros(table.dim()),
            };
            agents.push(Agent {
                spawn_model_id: m,
                agent_id: a,
                bundle: training_bundle(config.seed, &config.env.map, &rules, m, a)?,
                params,
            });
        }
    }
    let policies: &[PolicyKind] = match agents_dir {
        Some(_) => &PolicyKind::ALL,
        None => &[PolicyKind::Random, PolicyKind::Oracle],
    };
    let eval = config.eval_config();
    let records = match eval.mode {
        EvalMode::UnseenClass => run_unseen_class_suite(
            &agents,
            policies,
            &config.embeddings.unseen_spec(),
            &vocab,
            &table,
            &rules,
            &config.env.map,
            &eval,
        )?,
        _ => evaluate(&agents, policies, &table, &rules, &config.env.map, &eval)?,
    };
    export_results(&common.out, &records)?;
    emit_plot_data(&common.out.join("class_plot.csv"), &class_plot_rows(&records))?;
    print_summary(&records);
    Ok(())
}

pub fn report(records: &Path, out: &Path) -> Outcome {
    let records = read_records_csv(records)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(runtime)?;
    export_results(out, &records)?;
    emit_plot_data(&out.join("class_plot.csv"), &class_plot_rows(&records))?;
    print_summary(&records);
    Ok(())
}

fn print_summary(records: &[graphnav::harness::EvalRecord]) {
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
    println!("{:<10} {:>7} {:>14} {:>14}", "policy", "n", "success", "steps");
    for row in aggregate_metrics(records, GroupBy::Policy) {
        println!(
            "{:<10} {:>7} {:>6.3} ± {:<5.3} {:>6} ± {:<5}",
            row.group,
            row.n,
            row.success_mean,
            row.success_std,
            fmt(row.steps_mean),
            fmt(row.steps_std)
        );
    }
}
