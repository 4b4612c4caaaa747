use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use gifkit_core::consistency::{check_consistent, AcceptanceWitness, ConsistencyReport};
use gifkit_core::dot::{gdf_dot, gif_dot, protocol_dot};
use gifkit_core::dsl::{parse_bytes, serialize, ProtocolDocument};
use gifkit_core::export::{gdf_json, gif_json, report_json};
use gifkit_core::gdf::{
    abstract_meaning_of_decision, build_gdf, characters_same_meaning, compose_meaning, decisions_equivalent,
    enforced_selections, epsilon_closure, Composition,
};
use gifkit_core::gif::{derive_decisions, fulfills, run_gif, show_decision, DecisionSequence, Gif, GifError, GifRun};
use gifkit_core::product::Limits;
use gifkit_core::protocol::{Configuration, Protocol, TransitionRef};
use gifkit_core::symbol::{parse_product_char, ProductChar, Qualified, Symbol};

use crate::{Cli, Command, Format, MeaningArgs, SimulateArgs, View};

const NEGATIVE: u8 = 1;

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let limits = Limits::with_max_states(cli.max_states);
    if !matches!(cli.command, Command::Fmt { .. }) {
        eprintln!("max states: {}", limits.max_states);
    }
    let out = &mut io::stdout().lock();
    match &cli.command {
        Command::Check { file, format } => check(&load(file)?, *format, &limits, out),
        Command::Simulate(args) => simulate(args, &limits, out),
        Command::Derive { file, format } => derive(&load(file)?, *format, &limits, out),
        Command::Gdf { file, format } => gdf(&load(file)?, *format, &limits, out),
        Command::Meaning(args) => meaning(args, &limits, out),
        Command::Fulfill { file, seq, cycle, from } => {
            let doc = load(file)?;
            let g = game(&doc, &limits)?;
            let p = g.base();
            let q0 = match from {
                Some(text) => configuration(p, text)?,
                None => p.initial_configuration(),
            };
            let seq = sequence(seq, cycle.as_deref())?;
            let ok = fulfills(&g, &q0, &seq)?;
            writeln!(out, "{}", if ok { "fulfilled" } else { "not fulfilled" })?;
            Ok(verdict(ok))
        }
        Command::Fmt { file, check } => {
            let text = fs::read(file).with_context(|| format!("cannot read {}", file.display()))?;
            let doc = parse_bytes(&text).map_err(|e| anyhow!("{}:{e}", file.display()))?;
            let canonical = serialize(&doc);
            if *check {
                let same = canonical.as_bytes() == text.as_slice();
                if !same {
                    writeln!(out, "{} is not in canonical form", file.display())?;
                }
                Ok(verdict(same))
            } else {
                write!(out, "{canonical}")?;
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Dot { file, view } => {
            let doc = load(file)?;
            let text = match view {
                View::Protocol => protocol_dot(&doc),
                View::Gif => gif_dot(doc.name.as_str(), &game(&doc, &limits)?),
                View::Gdf => {
                    let g = game(&doc, &limits)?;
                    gdf_dot(doc.name.as_str(), &build_gdf(&g), g.base())
                }
            };
            write!(out, "{text}")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NEGATIVE)
    }
}

pub fn load(path: &Path) -> Result<ProtocolDocument> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_bytes(&bytes).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn game(doc: &ProtocolDocument, limits: &Limits) -> Result<Gif> {
    derive_decisions(&doc.protocol, &doc.labels, limits).map_err(|e| match e {
        GifError::Inconsistent(_) => anyhow!("protocol {} is not consistent; run `gifkit check` for a witness", doc.name),
        e => e.into(),
    })
}

fn configuration(p: &Protocol, text: &str) -> Result<Configuration> {
    p.parse_configuration(text)
        .with_context(|| format!("bad configuration `{text}`"))
}

fn symbols(names: &[String]) -> Result<Vec<Symbol>> {
    names
        .iter()
        .map(|n| n.trim())
        .filter(|n| !n.is_empty())
        .map(|n| Symbol::new(n).with_context(|| format!("bad decision name `{n}`")))
        .collect()
}

fn sequence(prefix: &[String], cycle: Option<&[String]>) -> Result<DecisionSequence> {
    Ok(DecisionSequence {
        prefix: symbols(prefix)?,
        cycle: cycle.map(symbols).transpose()?,
    })
}

pub fn show_set(p: &Protocol, set: &BTreeSet<Configuration>) -> String {
    let items: Vec<String> = set.iter().map(|c| p.describe(c)).collect();
    format!("{{{}}}", items.join(", "))
}

fn show_path(path: &[TransitionRef]) -> String {
    if path.is_empty() {
        "(empty)".into()
    } else {
        path.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("; ")
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn report_text(name: &str, p: &Protocol, r: &ConsistencyReport, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "protocol {name}: {} reachable configurations", r.configurations)?;
    writeln!(out, "well-formed:   {}", yes(r.well_formed.holds))?;
    if let Some(w) = &r.well_formed.witness {
        writeln!(out, "  input {} cannot be processed at {}", w.input, p.describe(&w.configuration))?;
        writeln!(out, "  path: {}", show_path(&w.path))?;
    }
    writeln!(out, "interruptible: {}", yes(r.interruptible.holds))?;
    if let Some(w) = &r.interruptible.witness {
        let cfgs: Vec<String> = w.configurations.iter().map(|c| p.describe(c)).collect();
        writeln!(out, "  endless exchange through {}", cfgs.join(" -> "))?;
        writeln!(out, "  prefix: {}", show_path(&w.prefix))?;
        writeln!(out, "  cycle: {}", show_path(&w.cycle))?;
    }
    writeln!(out, "accepting:     {}", yes(r.accepting.holds))?;
    match &r.accepting.witness {
        None => {}
        Some(AcceptanceWitness::NonFinalTerminal { path, configuration }) => {
            writeln!(out, "  run stops in non-final {}", p.describe(configuration))?;
            writeln!(out, "  path: {}", show_path(path))?;
        }
        Some(AcceptanceWitness::TerminalUnderMuller { path, configuration }) => {
            writeln!(out, "  finite maximal run under Muller acceptance, stops at {}", p.describe(configuration))?;
            writeln!(out, "  path: {}", show_path(path))?;
        }
        Some(AcceptanceWitness::RejectedInfinitySet { prefix, cycle, set }) => {
            let set: BTreeSet<Configuration> = set.iter().cloned().collect();
            writeln!(out, "  rejected infinity set {}", show_set(p, &set))?;
            writeln!(out, "  prefix: {}", show_path(prefix))?;
            writeln!(out, "  cycle: {}", show_path(cycle))?;
        }
    }
    writeln!(out, "consistent:    {}", yes(r.consistent))
}

fn check(doc: &ProtocolDocument, format: Format, limits: &Limits, out: &mut impl Write) -> Result<ExitCode> {
    let p = &doc.protocol;
    let r = check_consistent(p, limits)?;
    match format {
        Format::Text => report_text(doc.name.as_str(), p, &r, out)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report_json(doc.name.as_str(), p, &r))?)?,
        Format::Dot => bail!("`check` has no DOT output; use text or json"),
    }
    Ok(verdict(r.consistent))
}

fn derive(doc: &ProtocolDocument, format: Format, limits: &Limits, out: &mut impl Write) -> Result<ExitCode> {
    let g = game(doc, limits)?;
    let p = g.base();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&gif_json(doc.name.as_str(), &g))?)?,
        Format::Dot => write!(out, "{}", gif_dot(doc.name.as_str(), &g))?,
        Format::Text => {
            writeln!(out, "decisions of {} ({}):", doc.name, g.decisions().len())?;
            for (t, d) in g.assignment() {
                if g.decisions().contains_key(&d.name) {
                    writeln!(out, "  {:<12} {:<11} {t}", d.name.as_str(), d.kind.to_string())?;
                }
            }
            let mut rows: Vec<String> = g
                .entries()
                .map(|e| {
                    format!(
                        "  {}  {},{} / {}  ->  {}",
                        p.describe(e.from),
                        ProductChar(e.input),
                        show_decision(e.decision),
                        ProductChar(e.output),
                        p.describe(e.to)
                    )
                })
                .collect();
            rows.sort();
            writeln!(out, "transition function ({} entries):", rows.len())?;
            for r in rows {
                writeln!(out, "{r}")?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gdf(doc: &ProtocolDocument, format: Format, limits: &Limits, out: &mut impl Write) -> Result<ExitCode> {
    let g = game(doc, limits)?;
    let d = build_gdf(&g);
    match format {
        Format::Text => write!(out, "{}", d.render_text(doc.name.as_str(), g.base()))?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&gdf_json(doc.name.as_str(), &g, &d))?)?,
        Format::Dot => write!(out, "{}", gdf_dot(doc.name.as_str(), &d, g.base()))?,
    }
    for o in &d.overlaps {
        eprintln!(
            "note: closures of {} overlap and were merged into G{}",
            show_set(g.base(), &o.seeds),
            o.state
        );
    }
    Ok(ExitCode::SUCCESS)
}

pub fn print_run(p: &Protocol, run: &GifRun, out: &mut impl Write) -> io::Result<()> {
    for (k, s) in run.steps.iter().enumerate() {
        let m = &s.meaning;
        if run.lasso.as_ref().is_some_and(|l| l.loop_start == k) {
            writeln!(out, "-- cycle --")?;
        }
        writeln!(
            out,
            "{k:>4}  {}  {},{} / {}  ->  {}",
            p.describe(&m.source),
            ProductChar(&m.input),
            show_decision(&m.decision),
            ProductChar(&m.output),
            p.describe(&m.target)
        )?;
    }
    match &run.lasso {
        None => writeln!(out, "end  {}", p.describe(run.last_configuration())),
        Some(l) => writeln!(out, "infinity set {}", show_set(p, &l.infinity_set)),
    }
}

fn simulate(args: &SimulateArgs, limits: &Limits, out: &mut impl Write) -> Result<ExitCode> {
    let doc = load(&args.file)?;
    let g = game(&doc, limits)?;
    if args.interactive {
        return crate::interactive::session(&g, args, out);
    }
    let seq = sequence(&args.decisions, args.cycle.as_deref())?;
    let run = match run_gif(&g, &seq) {
        Ok(run) => run,
        Err(e @ GifError::NotEnabled { .. }) => {
            writeln!(out, "{e}")?;
            return Ok(ExitCode::from(NEGATIVE));
        }
        Err(e) => return Err(e.into()),
    };
    let p = g.base();
    print_run(p, &run, out)?;
    if let Some(l) = &run.lasso {
        let ok = p.uses_muller() && p.muller_accepts(&l.infinity_set);
        writeln!(out, "{}", if ok { "accepted" } else { "rejected" })?;
        return Ok(verdict(ok));
    }
    Ok(ExitCode::SUCCESS)
}

fn character(text: &str) -> Result<Qualified> {
    Qualified::parse(text).with_context(|| format!("bad character `{text}` (expected ROLE.name)"))
}

fn meaning(args: &MeaningArgs, limits: &Limits, out: &mut impl Write) -> Result<ExitCode> {
    let doc = load(&args.file)?;
    let g = game(&doc, limits)?;
    let p = g.base();
    if let Some(d) = &args.decision {
        let d = Symbol::new(d).with_context(|| format!("bad decision name `{d}`"))?;
        let m = abstract_meaning_of_decision(&g, &d)?;
        writeln!(out, "abstract meaning of {d}:")?;
        for (source, closure) in &m {
            writeln!(out, "  from {}: {}", p.describe(source), show_set(p, &closure.members))?;
        }
        if let Some(other) = &args.versus {
            let other = Symbol::new(other).with_context(|| format!("bad decision name `{other}`"))?;
            let same = decisions_equivalent(&g, &d, &other)?;
            writeln!(out, "{d} and {other} {} the same meaning", if same { "have" } else { "do not have" })?;
            return Ok(verdict(same));
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let (Some(c), Some(at)) = (&args.character, &args.at) {
        let i = character(c)?;
        let at = configuration(p, at)?;
        let sel = enforced_selections(&g, &i, &at)?;
        if sel.is_empty() {
            let t = g
                .eps_step(g.id_of(&at)?)
                .ok_or_else(|| anyhow!("{i} is not delivered without a decision at {}", p.describe(&at)))?;
            let target = &g.product().transitions()[t].to;
            let closure = epsilon_closure(&g, g.product().config(*target))?;
            writeln!(out, "{i} at {} enforces no selection", p.describe(&at))?;
            writeln!(out, "  leads to {}", show_set(p, &closure.members))?;
        } else {
            writeln!(out, "{i} at {} enforces selections:", p.describe(&at))?;
            for d in &sel {
                for (source, closure) in abstract_meaning_of_decision(&g, d)? {
                    if source == at {
                        writeln!(out, "  {d}: {}", show_set(p, &closure.members))?;
                    }
                }
            }
        }
        if let (Some(c2), Some(at2)) = (&args.versus_char, &args.versus_at) {
            let i2 = character(c2)?;
            let at2 = configuration(p, at2)?;
            let same = characters_same_meaning(&g, &i, &at, &i2, &at2)?;
            writeln!(
                out,
                "{i} at {} and {i2} at {} {} the same meaning",
                p.describe(&at),
                p.describe(&at2),
                if same { "have" } else { "do not have" }
            )?;
            return Ok(verdict(same));
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(parts) = &args.compose {
        let step = |cfg: &str, input: &str, decision: &str| -> Result<_> {
            let cfg = configuration(p, cfg)?;
            let input = parse_product_char(input).with_context(|| format!("bad input `{input}`"))?;
            let decision = match decision.trim() {
                "eps" | "" => None,
                d => Some(Symbol::new(d).with_context(|| format!("bad decision name `{d}`"))?),
            };
            Ok(g.interpret(&cfg, input.as_ref(), decision.as_ref())?)
        };
        let m1 = step(&parts[0], &parts[1], &parts[2])?;
        let m2 = step(&parts[3], &parts[4], &parts[5])?;
        return Ok(match compose_meaning(&m1, &m2) {
            Composition::Composed { output, target } => {
                writeln!(out, "composed: ({}, {})", ProductChar(&output), p.describe(&target))?;
                ExitCode::SUCCESS
            }
            Composition::NonCompositional => {
                writeln!(
                    out,
                    "non-compositional: the second step starts at {}, not at {}",
                    p.describe(&m2.source),
                    p.describe(&m1.target)
                )?;
                ExitCode::from(NEGATIVE)
            }
        });
    }
    bail!("nothing to query")
}
