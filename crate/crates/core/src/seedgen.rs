//! Deterministic random seed-set generation for the property suites.
//! Produces seed-file text (exercising the parser on every run) with a
//! mix of arithmetic sentences, self- and cross-referential truth and
//! determinateness atoms, quote chains, and quantified sentences.

use rand::Rng;

use crate::syntax::Nat;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Number of independent random declarations.
    pub decls: usize,
    /// Maximum connective depth of each declaration body.
    pub max_depth: usize,
    /// Length of the appended `T(quote(...))` chain (0 for none).
    pub chain: usize,
    /// Allow `|` / `exists` alongside the conjunctive connectives.
    pub disjunctive: bool,
    /// Largest numeral literal used in random terms.
    pub max_literal: Nat,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            decls: 4,
            max_depth: 3,
            chain: 2,
            disjunctive: true,
            max_literal: 4,
        }
    }
}

fn gen_term(rng: &mut impl Rng, cfg: &GenConfig, env: &[String], depth: usize) -> String {
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => "0".to_string(),
            1 => format!("#{}", rng.gen_range(0..=cfg.max_literal)),
            2 if !env.is_empty() => env[rng.gen_range(0..env.len())].clone(),
            _ => format!("S({})", if rng.gen_bool(0.5) { "0" } else { "#1" }),
        };
    }
    match rng.gen_range(0..4) {
        0 => format!("S({})", gen_term(rng, cfg, env, depth - 1)),
        1 => format!(
            "({} + {})",
            gen_term(rng, cfg, env, depth - 1),
            gen_term(rng, cfg, env, 0)
        ),
        2 => format!(
            "({} * {})",
            gen_term(rng, cfg, env, 0),
            gen_term(rng, cfg, env, 0)
        ),
        _ => gen_term(rng, cfg, env, 0),
    }
}

fn gen_atom(rng: &mut impl Rng, cfg: &GenConfig, names: &[String], env: &[String]) -> String {
    match rng.gen_range(0..6) {
        0 | 1 => format!(
            "{} = {}",
            gen_term(rng, cfg, env, 1),
            gen_term(rng, cfg, env, 1)
        ),
        2 => {
            if !env.is_empty() && rng.gen_bool(0.5) {
                format!("T({})", env[rng.gen_range(0..env.len())])
            } else {
                format!("T(quote({}))", names[rng.gen_range(0..names.len())])
            }
        }
        3 => format!("D(quote({}))", names[rng.gen_range(0..names.len())]),
        4 => format!("T(#{})", rng.gen_range(0..=cfg.max_literal)),
        _ => format!("D(#{})", rng.gen_range(0..=cfg.max_literal)),
    }
}

fn gen_formula(
    rng: &mut impl Rng,
    cfg: &GenConfig,
    names: &[String],
    env: &mut Vec<String>,
    depth: usize,
) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return gen_atom(rng, cfg, names, env);
    }
    let connective_range = if cfg.disjunctive { 6 } else { 4 };
    match rng.gen_range(0..connective_range) {
        0 => format!("~{}", gen_formula(rng, cfg, names, env, depth - 1)),
        1 => format!(
            "({} & {})",
            gen_formula(rng, cfg, names, env, depth - 1),
            gen_formula(rng, cfg, names, env, depth - 1)
        ),
        2 | 3 => {
            let var = format!("v{}", env.len());
            env.push(var.clone());
            let body = gen_formula(rng, cfg, names, env, depth - 1);
            env.pop();
            let q = if rng.gen_bool(0.5) { "forall" } else { "exists" };
            if q == "exists" && !cfg.disjunctive {
                format!("forall {var}. {body}")
            } else {
                format!("{q} {var}. {body}")
            }
        }
        4 => format!(
            "({} | {})",
            gen_formula(rng, cfg, names, env, depth - 1),
            gen_formula(rng, cfg, names, env, depth - 1)
        ),
        _ => format!("~{}", gen_atom(rng, cfg, names, env)),
    }
}

/// Random seed-file text. Declarations may reference one another (and
/// themselves) through quotes; a trailing chain nests the truth predicate
/// to force multi-stage growth. The text is validated against a scratch
/// table before being returned: two quoted declarations can collide on
/// one resolved sentence, which the binder rejects, so such draws are
/// redrawn.
pub fn random_seed_text(rng: &mut impl Rng, cfg: &GenConfig) -> String {
    for _ in 0..32 {
        let text = candidate_text(rng, cfg);
        let mut scratch = crate::intern::SentenceTable::new();
        if crate::parse::parse_source(&text, &mut scratch).is_ok() {
            return text;
        }
    }
    // With four-plus declarations the collision probability per draw is
    // tiny; 32 misses in a row means the config is degenerate.
    panic!("could not draw a bindable seed set for {cfg:?}");
}

fn candidate_text(rng: &mut impl Rng, cfg: &GenConfig) -> String {
    let mut names: Vec<String> = (0..cfg.decls).map(|i| format!("n{i}")).collect();
    let mut lines = Vec::new();
    for i in 0..cfg.decls {
        let mut env = Vec::new();
        let depth = rng.gen_range(0..=cfg.max_depth);
        let body = gen_formula(rng, cfg, &names, &mut env, depth);
        lines.push(format!("n{i} := {body}"));
    }
    if cfg.chain > 0 {
        lines.push("base := 0 = 0".to_string());
        names.push("base".to_string());
        let mut prev = "base".to_string();
        for i in 0..cfg.chain {
            let name = format!("chain{i}");
            lines.push(format!("{name} := T(quote({prev}))"));
            prev = name.clone();
            names.push(name);
        }
    }
    // one self-referential declaration per file keeps ungrounded
    // sentences in the mix
    if rng.gen_bool(0.7) {
        let target = if rng.gen_bool(0.5) { "liar" } else { "teller" };
        if target == "liar" {
            lines.push("liar := ~T(quote(liar))".to_string());
        } else {
            lines.push("teller := T(quote(teller))".to_string());
        }
    }
    lines.join("\n")
}
