//! Step through a game by choosing decisions one at a time.
//!
//! Every choice is echoed as `> NAME`, so a recorded session replayed with
//! `--replay` prints the same transcript.

use std::fs;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use gifkit_core::gdf::epsilon_closure;
use gifkit_core::gif::{show_decision, Gif};
use gifkit_core::product::Product;
use gifkit_core::symbol::ProductChar;

use crate::commands::show_set;
use crate::SimulateArgs;

pub fn session(g: &Gif, args: &SimulateArgs, out: &mut impl Write) -> Result<ExitCode> {
    let replay: Option<Vec<String>> = match &args.replay {
        Some(path) => Some(
            fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let stdin = io::stdin();
    let mut answers: Box<dyn Iterator<Item = String>> = match replay {
        Some(lines) => Box::new(lines.into_iter()),
        None => Box::new(stdin.lock().lines().map_while(Result::ok)),
    };
    let answers = steps(g, &mut answers, out)?;
    if let Some(path) = &args.record {
        let text: String = answers.iter().map(|a| format!("{a}\n")).collect();
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs the stepper, returning every answer consumed.
pub fn steps(g: &Gif, answers: &mut dyn Iterator<Item = String>, out: &mut impl Write) -> Result<Vec<String>> {
    let p = g.base();
    let product = g.product();
    let mut here = Product::INITIAL;
    let mut time = 0;
    let mut given = Vec::new();
    loop {
        while let Some(t) = g.eps_step(here) {
            let m = g.meaning_of(t);
            writeln!(
                out,
                "{time:>4}  {}  {},{} / {}  ->  {}",
                p.describe(&m.source),
                ProductChar(&m.input),
                show_decision(&m.decision),
                ProductChar(&m.output),
                p.describe(&m.target)
            )?;
            here = product.transitions()[t].to;
            time += 1;
        }
        let cfg = product.config(here);
        let enabled = g.enabled(here);
        writeln!(out, "at {}", p.describe(cfg))?;
        if let Some(o) = &cfg.pending {
            writeln!(out, "  pending output {o}")?;
        }
        if enabled.is_empty() {
            writeln!(out, "terminated")?;
            return Ok(given);
        }
        for (k, (d, t)) in enabled.iter().enumerate() {
            let target = product.config(product.transitions()[*t].to);
            let closure = epsilon_closure(g, target)?;
            writeln!(out, "  {}) {d} -> {}", k + 1, show_set(p, &closure.members))?;
        }
        let pick = loop {
            writeln!(out, "choose a decision (name or number, `q` to stop):")?;
            out.flush()?;
            let Some(answer) = answers.next() else {
                writeln!(out, "stopped")?;
                return Ok(given);
            };
            let answer = answer.trim().to_string();
            given.push(answer.clone());
            if answer == "q" {
                writeln!(out, "> q")?;
                writeln!(out, "stopped")?;
                return Ok(given);
            }
            let by_number = answer.parse::<usize>().ok().and_then(|n| n.checked_sub(1)).and_then(|n| enabled.get(n));
            let found = by_number.or_else(|| enabled.iter().find(|(d, _)| d.as_str() == answer));
            match found {
                Some(hit) => break hit.clone(),
                None => writeln!(out, "> {answer}\n  `{answer}` is not enabled here")?,
            }
        };
        let (d, t) = pick;
        writeln!(out, "> {d}")?;
        let m = g.meaning_of(t);
        writeln!(
            out,
            "{time:>4}  {}  {},{} / {}  ->  {}",
            p.describe(&m.source),
            ProductChar(&m.input),
            show_decision(&m.decision),
            ProductChar(&m.output),
            p.describe(&m.target)
        )?;
        here = product.transitions()[t].to;
        time += 1;
    }
}
