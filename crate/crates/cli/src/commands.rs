use std::fmt::Write;
use std::path::Path;

use ceg_core::causal::{
    backdoor_adjustment_edge_level, brute_force_effect, causal_effect_devent, causal_effect_edge_level,
    check_backdoor_partition, controlled_devents, expected_effect_imperfect, partition_from_items,
    resolve_devent, search_backdoor_partition, BackdoorPartition, BackdoorReport, PartitionBasis,
};
use ceg_core::documents::{self, resolve_intervention, InterventionDocument, QueryDocument, Scenario};
use ceg_core::intervention::{
    manipulated_ceg, manipulation_from_indicators, validate_stochastic, InterventionIndicators,
    RemedyClass, StochasticManipulation,
};
use ceg_core::{
    build_event_tree_with_tolerance, compute_positions, dot, fixtures, root_to_sink_paths, Ceg,
    CegError, DEventId, ModelDocument, NodeId, ProbabilityTree, StagedTree,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{read, write, CliError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DotTarget {
    Tree,
    Staged,
    Ceg,
    Manipulated,
}

pub fn load_model(cfg: &RunConfig) -> Result<ProbabilityTree, CliError> {
    let doc = ModelDocument::from_json(&read(cfg.model()?)?)?;
    Ok(build_event_tree_with_tolerance(&doc, cfg.tolerance)?)
}

fn load_intervention(cfg: &RunConfig) -> Result<InterventionDocument, CliError> {
    let path = cfg
        .intervention_path
        .as_deref()
        .ok_or_else(|| CliError::Validation("--intervention is required".into()))?;
    Ok(InterventionDocument::from_json(&read(path)?)?)
}

fn load_query(cfg: &RunConfig) -> Result<QueryDocument, CliError> {
    let path = cfg
        .query_path
        .as_deref()
        .ok_or_else(|| CliError::Validation("--query is required".into()))?;
    Ok(QueryDocument::from_json(&read(path)?)?)
}

fn join<I: IntoIterator<Item = String>>(items: I) -> String {
    let v: Vec<String> = items.into_iter().collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(" ")
    }
}

fn node_names(c: &Ceg, nodes: &[NodeId]) -> String {
    join(nodes.iter().map(|&n| c.node(n).name.clone()))
}

fn numbers(v: &[f64]) -> String {
    join(v.iter().map(|x| x.to_string()))
}

fn indicator_string(v: &[u8]) -> String {
    v.iter().map(|b| b.to_string()).collect()
}

// --- build -------------------------------------------------------------------

pub fn cmd_build(cfg: &RunConfig) -> Result<String, CliError> {
    let pt = load_model(cfg)?;
    let st = StagedTree::new(pt.clone());
    let positions = compute_positions(&st);
    let c = ceg_core::build_ceg(&st, &positions);
    let t = pt.tree();
    let mut out = String::new();
    let name = |v| t.name(v).to_string();
    writeln!(out, "model: {}", pt.name().unwrap_or("unnamed")).unwrap();
    writeln!(out, "vertices: {}", t.vertex_count()).unwrap();
    writeln!(out, "situations: {}", t.situations().count()).unwrap();
    writeln!(out, "leaves: {}", t.leaves().count()).unwrap();
    writeln!(out, "stages: {}", st.stages().len()).unwrap();
    for (k, block) in st.stages().stages().iter().enumerate() {
        writeln!(out, "stage u{k}: {}", join(block.iter().map(|&v| name(v)))).unwrap();
    }
    writeln!(out, "edge colours: {}", st.colour_count()).unwrap();
    writeln!(out, "positions: {}", c.position_count()).unwrap();
    for w in c.positions() {
        let n = c.node(w);
        writeln!(
            out,
            "position {}: {} (stage u{})",
            n.name,
            n.members.join(" "),
            n.stage.expect("positions are staged")
        )
        .unwrap();
    }
    for sink in [c.failure_sink(), c.working_sink()].into_iter().flatten() {
        let n = c.node(sink);
        writeln!(out, "sink {}: {} leaves", n.name, n.members.len()).unwrap();
    }
    writeln!(out, "edges: {}", c.edges().len()).unwrap();
    let parallel: Vec<String> = (0..c.edges().len())
        .map(ceg_core::CegEdgeId)
        .filter(|&e| c.is_parallel(e) && c.edge(e).index == 1)
        .map(|e| format!("{}=>{}", c.node(c.edge(e).source).name, c.node(c.edge(e).target).name))
        .collect();
    writeln!(out, "parallel edges: {}", join(parallel)).unwrap();
    let paths = root_to_sink_paths(&c);
    writeln!(out, "paths: {}", paths.all.len()).unwrap();
    writeln!(out, "failure paths: {}", paths.failure.len()).unwrap();
    writeln!(out, "deteriorating paths: {}", paths.deteriorating.len()).unwrap();
    writeln!(out, "root-cause positions: {}", node_names(&c, &c.root_cause_positions())).unwrap();

    if let Some(dir) = &cfg.output_dir {
        for (file, text) in [
            ("tree.dot", dot::event_tree_dot(&pt)),
            ("staged.dot", dot::staged_tree_dot(&st)),
            ("ceg.dot", dot::ceg_dot(&c)),
        ] {
            let path = dir.join(file);
            write(&path, &text)?;
            writeln!(out, "dot: {}", path.display()).unwrap();
        }
    }
    Ok(out)
}

// --- query -------------------------------------------------------------------

/// Whether the d-event formula applies to `m`, and why not otherwise. It
/// needs every controlled d-event to act the same way wherever it is
/// controlled.
fn devent_formula_blocker(c: &Ceg, m: &StochasticManipulation) -> Option<String> {
    let w_star = m.positions();
    for x in controlled_devents(c, &w_star) {
        let mut seen: Option<f64> = None;
        for e in c.edges_with_devent(x) {
            let w = c.edge(e).source;
            let Some(hat) = m.theta_hat(w) else { continue };
            let k = c.out_edges(w).iter().position(|&o| o == e).expect("out-edge");
            match seen {
                Some(v) if (v - hat[k]).abs() > c.tolerance() => {
                    return Some(format!(
                        "{} receives different probabilities at several intervened positions",
                        c.devent(x).id
                    ));
                }
                _ => seen = Some(hat[k]),
            }
        }
    }
    None
}

fn declared_partition(c: &Ceg, w_star: &[NodeId], q: &QueryDocument) -> Result<Option<BackdoorPartition>, CliError> {
    let Some(p) = &q.partition else { return Ok(None) };
    let basis = PartitionBasis::parse(&p.by)?;
    let name = p.name.clone().unwrap_or_else(|| format!("declared {} partition", p.by));
    Ok(Some(partition_from_items(c, w_star, basis, &p.blocks, &name)?))
}

fn criterion_table(out: &mut String, c: &Ceg, report: &BackdoorReport) {
    let side = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
    for cmp in &report.comparisons {
        writeln!(
            out,
            "criterion {} | {} | {} | block {} | {} | {} | {}",
            cmp.criterion,
            c.node(cmp.position).name,
            c.edge_name(cmp.edge),
            cmp.block + 1,
            side(cmp.lhs),
            side(cmp.rhs),
            if cmp.holds { "ok" } else { "VIOLATED" }
        )
        .unwrap();
    }
}

struct Verdict {
    partition: Option<BackdoorPartition>,
    problem: Option<String>,
}

fn backdoor_section(
    out: &mut String,
    c: &Ceg,
    w_star: &[NodeId],
    q: &QueryDocument,
    y: DEventId,
) -> Result<Verdict, CliError> {
    let (candidate, declared) = match declared_partition(c, w_star, q)? {
        Some(p) => (Some(p), true),
        None => (search_backdoor_partition(c, w_star, y), false),
    };
    let Some(p) = candidate else {
        writeln!(out, "back-door: not identified by back-door search").unwrap();
        return Ok(Verdict {
            partition: None,
            problem: Some("no back-door partition found".into()),
        });
    };
    let report = check_backdoor_partition(c, w_star, &p, y)?;
    writeln!(out, "partition source: {}", if declared { "declared" } else { "search" }).unwrap();
    for (k, label) in p.labels.iter().enumerate() {
        writeln!(out, "block {}: {} ({} paths)", k + 1, label, p.blocks[k].len()).unwrap();
    }
    if report.holds {
        writeln!(out, "back-door: VERIFIED ({})", p.name).unwrap();
    } else {
        writeln!(out, "back-door: FAILED ({})", p.name).unwrap();
    }
    for k in [1u8, 2] {
        writeln!(
            out,
            "criterion {k}: {}",
            if report.criterion_holds(k) { "holds" } else { "violated" }
        )
        .unwrap();
    }
    criterion_table(out, c, &report);
    Ok(if report.holds {
        Verdict {
            partition: Some(p),
            problem: None,
        }
    } else {
        Verdict {
            partition: None,
            problem: Some(format!("{} fails the back-door criteria", p.name)),
        }
    })
}

fn manipulated_description(out: &mut String, c: &Ceg, m: &StochasticManipulation) -> Result<(), CliError> {
    let plan = validate_stochastic(c, m)?;
    writeln!(out, "intervened positions: {}", node_names(c, &plan.intervened)).unwrap();
    for (w, hat) in m.iter() {
        writeln!(out, "theta_hat {}: {}", c.node(w).name, numbers(hat)).unwrap();
    }
    writeln!(
        out,
        "zeroed sibling edges: {}",
        join(plan.zeroed_sibling_edges.iter().map(|&e| c.edge_name(e)))
    )
    .unwrap();
    let mc = manipulated_ceg(c, m)?;
    let kept: Vec<NodeId> = mc.node_origin.clone();
    let pruned: Vec<NodeId> = c.positions().filter(|n| !kept.contains(n)).collect();
    writeln!(
        out,
        "manipulated positions: {}",
        join(mc.ceg.positions().map(|n| mc.ceg.node(n).name.clone()))
    )
    .unwrap();
    writeln!(out, "pruned positions: {}", node_names(c, &pruned)).unwrap();
    writeln!(out, "manipulated edges: {}", mc.ceg.edges().len()).unwrap();
    writeln!(out, "manipulated paths: {}", mc.ceg.path_count()).unwrap();
    writeln!(out, "fine cut: {}", if c.is_fine_cut(&plan.intervened) { "YES" } else { "NO" }).unwrap();
    Ok(())
}

/// Runs one scenario and returns its oracle effect plus any problem that
/// should turn into an identification failure.
fn scenario_section(
    out: &mut String,
    c: &Ceg,
    s: &Scenario,
    q: &QueryDocument,
    y: DEventId,
    backdoor_only: bool,
) -> Result<(f64, Vec<String>), CliError> {
    let m = &s.manipulation;
    let mut problems = Vec::new();
    if m.is_empty() {
        let idle = brute_force_effect(c, m, y)?;
        writeln!(out, "intervened positions: none").unwrap();
        if !backdoor_only {
            writeln!(out, "effect oracle: {idle}").unwrap();
        }
        writeln!(out, "back-door: not needed (no intervened positions)").unwrap();
        return Ok((idle, problems));
    }
    manipulated_description(out, c, m)?;
    let w_star = m.positions();
    let oracle = brute_force_effect(c, m, y)?;
    let edge_level = causal_effect_edge_level(c, m, y)?;
    let devent = match devent_formula_blocker(c, m) {
        Some(reason) => Err(reason),
        None => match causal_effect_devent(c, m, y) {
            Ok(v) => Ok(v),
            Err(e @ CegError::ControlledEventLeaksOutsideIntervention { .. }) => Err(e.to_string()),
            Err(e) => return Err(e.into()),
        },
    };
    let verdict = backdoor_section(out, c, &w_star, q, y)?;
    problems.extend(verdict.problem);
    let adjustment = match &verdict.partition {
        Some(p) => Some(backdoor_adjustment_edge_level(c, m, p, y)?),
        None => None,
    };
    if !backdoor_only {
        match &devent {
            Ok(v) => writeln!(out, "effect devent formula: {v}").unwrap(),
            Err(reason) => writeln!(out, "effect devent formula: n/a ({reason})").unwrap(),
        }
        writeln!(out, "effect edge level: {edge_level}").unwrap();
        writeln!(out, "effect oracle: {oracle}").unwrap();
        match adjustment {
            Some(v) => writeln!(out, "effect back-door adjustment: {v}").unwrap(),
            None => writeln!(out, "effect back-door adjustment: n/a").unwrap(),
        }
        let mut values = vec![edge_level];
        values.extend(devent.iter().copied());
        values.extend(adjustment);
        let agree = values.iter().all(|v| (v - oracle).abs() <= c.tolerance());
        writeln!(out, "agreement: {}", if agree { "YES" } else { "NO" }).unwrap();
        if !agree {
            problems.push("effect formulas disagree with the oracle".into());
        }
    }
    Ok((oracle, problems))
}

/// The query report, plus the failure to exit with after printing it.
pub fn cmd_query(cfg: &RunConfig, backdoor_only: bool) -> Result<(String, Option<CliError>), CliError> {
    let pt = load_model(cfg)?;
    let c = Ceg::from_tree(&pt);
    let doc = load_intervention(cfg)?;
    let q = load_query(cfg)?;
    let y = resolve_devent(&c, &q.target)?;
    let resolved = resolve_intervention(&c, &doc)?;

    let mut out = String::new();
    writeln!(out, "model: {}", c.name().unwrap_or("unnamed")).unwrap();
    writeln!(out, "target: {} ({})", c.devent(y).id, c.devent(y).text).unwrap();
    let route = if doc.theta_hat.is_some() {
        "theta_hat"
    } else if doc.fixed_edges.is_some() {
        "fixed edges"
    } else {
        "record"
    };
    writeln!(out, "intervention: {route}").unwrap();
    if let Some(class) = resolved.remedy {
        let label = match class {
            RemedyClass::Perfect => "perfect",
            RemedyClass::Imperfect => "imperfect",
            RemedyClass::Uncertain => "uncertain",
        };
        writeln!(out, "remedy: {label}").unwrap();
    }
    if let Some(d) = &resolved.indicator_distribution {
        let entries = d.iter().map(|(v, p)| format!("{}={}", indicator_string(v), p));
        writeln!(out, "indicator distribution: {}", join(entries)).unwrap();
    }
    writeln!(out, "scenarios: {}", resolved.scenarios.len()).unwrap();

    let mut problems = Vec::new();
    let mut effects = Vec::new();
    for (k, s) in resolved.scenarios.iter().enumerate() {
        writeln!(out).unwrap();
        writeln!(out, "[scenario {}]", k + 1).unwrap();
        writeln!(out, "label: {}", s.label).unwrap();
        writeln!(out, "weight: {}", s.weight).unwrap();
        if let Some(v) = &s.indicators {
            writeln!(out, "indicators: {}", indicator_string(v)).unwrap();
        }
        let (effect, issues) = scenario_section(&mut out, &c, s, &q, y, backdoor_only)?;
        effects.push(effect);
        problems.extend(issues.into_iter().map(|p| format!("scenario {}: {p}", k + 1)));
    }

    let mixture = matches!(resolved.remedy, Some(RemedyClass::Imperfect | RemedyClass::Uncertain));
    if mixture && !backdoor_only {
        let rec = resolved.record.as_ref().expect("record route");
        let prior = resolved.prior.as_ref().expect("record route has a prior");
        let map = |v: &[u8], _: &str| {
            manipulation_from_indicators(&c, prior, &InterventionIndicators::from_vector(&c, v)?)
        };
        let breakdown = expected_effect_imperfect(&c, rec, &map, y)?;
        writeln!(out).unwrap();
        writeln!(out, "[mixture]").unwrap();
        for (k, t) in breakdown.terms.iter().enumerate() {
            writeln!(
                out,
                "term {}: action={} indicators={} weight={} effect={}",
                k + 1,
                t.action,
                indicator_string(&t.indicators),
                t.weight,
                t.effect
            )
            .unwrap();
        }
        let oracle_total: f64 = resolved.scenarios.iter().zip(&effects).map(|(s, e)| s.weight * e).sum();
        writeln!(out, "expected effect: {}", breakdown.total).unwrap();
        writeln!(out, "expected effect oracle: {oracle_total}").unwrap();
        if (breakdown.total - oracle_total).abs() > c.tolerance() {
            problems.push("mixture disagrees with the oracle".into());
        }
    } else if !backdoor_only && resolved.scenarios.len() == 1 {
        writeln!(out).unwrap();
        writeln!(out, "effect: {}", effects[0]).unwrap();
    }
    let failure = (!problems.is_empty()).then(|| CliError::Identification(problems.join("; ")));
    Ok((out, failure))
}

// --- export-dot --------------------------------------------------------------

pub fn cmd_export_dot(cfg: &RunConfig, which: DotTarget) -> Result<String, CliError> {
    let pt = load_model(cfg)?;
    Ok(match which {
        DotTarget::Tree => dot::event_tree_dot(&pt),
        DotTarget::Staged => dot::staged_tree_dot(&StagedTree::new(pt)),
        DotTarget::Ceg => dot::ceg_dot(&Ceg::from_tree(&pt)),
        DotTarget::Manipulated => {
            let c = Ceg::from_tree(&pt);
            let resolved = resolve_intervention(&c, &load_intervention(cfg)?)?;
            let m = resolved.single().ok_or_else(|| {
                CliError::Validation("the manipulated graph needs an intervention with a single manipulation".into())
            })?;
            if m.is_empty() {
                dot::ceg_dot(&c)
            } else {
                validate_stochastic(&c, m)?;
                dot::ceg_dot(&manipulated_ceg(&c, m)?.ceg)
            }
        }
    })
}

// --- fixtures ----------------------------------------------------------------

fn model_json(doc: ModelDocument, seed: Option<u64>, salt: u64, tolerance: f64) -> Result<String, CliError> {
    let Some(seed) = seed else { return Ok(doc.to_json()) };
    let pt = build_event_tree_with_tolerance(&doc, tolerance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    Ok(fixtures::randomize_theta(&pt, &mut rng)?.to_document().to_json())
}

pub fn cmd_fixtures(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let files = [
        ("bushing.json", model_json(fixtures::bushing_document(), cfg.seed, 1, cfg.tolerance)?),
        (
            "bushing-broken.json",
            model_json(fixtures::bushing_broken_document(), cfg.seed, 2, cfg.tolerance)?,
        ),
        ("conservator.json", model_json(fixtures::conservator_document(), cfg.seed, 3, cfg.tolerance)?),
        ("bushing-intervention.json", documents::bushing_intervention().to_json()),
        ("bushing-imperfect.json", documents::bushing_imperfect_intervention().to_json()),
        ("bushing-query.json", documents::bushing_query().to_json()),
        ("conservator-intervention.json", documents::conservator_intervention().to_json()),
        ("conservator-query.json", documents::conservator_query().to_json()),
    ];
    let mut out = String::new();
    for (name, text) in files {
        let path = dir.join(name);
        write(&path, &format!("{text}\n"))?;
        writeln!(out, "wrote: {}", path.display()).unwrap();
    }
    Ok(out)
}
