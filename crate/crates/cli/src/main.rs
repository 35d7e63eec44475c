use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gol_core::catalog::{
    g_relator, h_relator, make_group, nf_inverse, nf_product, rho_n, stallings_rank,
    subgroup_membership, GroupSpec, MarkedGroup,
};
use gol_core::dyadic::to_dyadic;
use gol_core::hnn::{conjugacy_witness, crossover, lambda_certificate, TowerGroup};
use gol_core::orders::{
    ball, dyadic_lex_compare, magnus_compare, replay_tau_obstruction, search_signing,
    shortlex_compare, Mode, SigningOutcome,
};
use gol_core::rewrite::{LenPlusJ, RewriteSystem};
use gol_core::word::{parse_word, random_word, Window, Word};
use gol_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normal forms, orders and HNN towers for a small catalog of groups.
#[derive(Parser)]
#[command(name = "gol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normal form of a word.
    Nf {
        #[arg(long)]
        group: String,
        word: String,
    },
    /// Run one of the built-in checks.
    Check {
        kind: CheckKind,
        #[command(flatten)]
        opts: CheckOpts,
    },
    /// Compare two words.
    Order {
        order: OrderKind,
        #[arg(long)]
        group: String,
        u: String,
        v: String,
    },
    /// Look for a signing of a ball, or an obstruction.
    SignSearch {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Bi)]
        mode: ModeArg,
        /// Generators spanning the ball, as a word (defaults to all).
        #[arg(long)]
        gens: Option<String>,
    },
    /// Britton reduction, conjugacy witnesses and length certificates.
    Hnn {
        action: HnnAction,
        #[command(flatten)]
        opts: HnnOpts,
    },
    /// Rank of a subgroup of a free group.
    Rank {
        #[arg(long, default_value = "free:2")]
        group: String,
        /// Test membership of this word as well.
        #[arg(long)]
        member: Option<String>,
        words: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Confluence,
    Termination,
    Axioms,
    Rho,
    TauTrace,
}

#[derive(Args)]
struct CheckOpts {
    #[arg(long)]
    group: Option<String>,
    /// Largest family index of the window (with --positions).
    #[arg(long)]
    families: Option<u32>,
    /// Largest |position| of the window.
    #[arg(long)]
    positions: Option<i64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest random word length.
    #[arg(long, default_value_t = 30)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    family: u32,
    /// N for the rho check.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    n: i64,
    /// Sign assumed by the shift trace.
    #[arg(long, value_enum, default_value_t = Premise::Plus)]
    premise: Premise,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Premise {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderKind {
    Shortlex,
    Magnus,
    Dyadiclex,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Left,
    Bi,
}

#[derive(Clone, Copy, ValueEnum)]
enum HnnAction {
    Reduce,
    Witness,
    Lambda,
}

#[derive(Args)]
struct HnnOpts {
    #[arg(long = "Z", default_value_t = 4)]
    z: i64,
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long = "M", default_value_t = 6)]
    m: u64,
    /// Base word for z >= 0 (two-element tower).
    #[arg(long)]
    g: Option<String>,
    /// Base word for z < 0 (two-element tower).
    #[arg(long)]
    h: Option<String>,
    /// Print the whole certificate.
    #[arg(long)]
    dump: bool,
    word: Option<String>,
}

/// A computed report and whether it is a positive result.
struct Report {
    text: String,
    pass: bool,
}

impl Report {
    fn pass(text: String) -> Report {
        Report { text, pass: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(r) => {
            print!("{}", r.text);
            if r.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_parse() { 2 } else { 3 })
        }
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(command: Command) -> Result<Report> {
    match command {
        Command::Nf { group, word } => {
            let g = make_group(&group)?;
            let nf = g.nf(&g.parse(&word)?)?;
            Ok(Report::pass(format!("nf: {nf}\n")))
        }
        Command::Check { kind, opts } => check(kind, &opts),
        Command::Order { order, group, u, v } => {
            let g = Arc::new(make_group(&group)?);
            let (u, v) = (g.parse(&u)?, g.parse(&v)?);
            let cmp = match order {
                OrderKind::Shortlex => shortlex_compare(&g.element(&u)?, &g.element(&v)?)?,
                OrderKind::Magnus => magnus_compare(&g, &u, &v)?,
                OrderKind::Dyadiclex => {
                    if !matches!(g.spec(), GroupSpec::Dyadic(_)) {
                        return Err(Error::domain(format!("dyadiclex needs an A window, not {g}")));
                    }
                    dyadic_lex_compare(&to_dyadic(&u)?, &to_dyadic(&v)?)
                }
            };
            let name = match cmp {
                std::cmp::Ordering::Less => "LT",
                std::cmp::Ordering::Equal => "EQ",
                std::cmp::Ordering::Greater => "GT",
            };
            Ok(Report::pass(format!("cmp: {name}\n")))
        }
        Command::SignSearch { group, radius, mode, gens } => {
            let g = Arc::new(make_group(&group)?);
            let gens = gens.map(|s| g.parse(&s)).transpose()?;
            let gens = gens.map(|w| w.gens().collect::<Vec<_>>());
            let set: Vec<Word> = ball(&g, radius, gens.as_deref())?
                .into_iter()
                .filter(|e| !e.is_identity())
                .map(|e| e.word().clone())
                .collect();
            let mode = match mode {
                ModeArg::Left => Mode::Left,
                ModeArg::Bi => Mode::Bi,
            };
            let head = format!("group: {g}\nmode: {mode}\nradius: {radius}\nelements: {}\n", set.len());
            Ok(match search_signing(&g, &set, mode)? {
                SigningOutcome::Signing(s) => Report::pass(format!("{head}result: SIGNING\n{s}")),
                SigningOutcome::Obstruction(c) => Report {
                    text: format!("{head}{c}"),
                    pass: false,
                },
            })
        }
        Command::Hnn { action, opts } => hnn(action, &opts),
        Command::Rank { group, member, words } => {
            let g = make_group(&group)?;
            let gens: Vec<Word> = words.iter().map(|w| g.parse(w)).collect::<Result<_>>()?;
            let (rank, graph) = stallings_rank(&g, &gens)?;
            let mut text = format!(
                "rank: {rank}\nvertices: {}\nedges: {}\n",
                graph.vertices,
                graph.edges.len()
            );
            let mut pass = true;
            if let Some(m) = member {
                let inside = subgroup_membership(&graph, &g.parse(&m)?);
                writeln!(text, "member: {inside}").unwrap();
                pass = inside;
            }
            Ok(Report { text, pass })
        }
    }
}

fn window_group(opts: &CheckOpts, default: &str) -> Result<MarkedGroup> {
    match (&opts.group, opts.families, opts.positions) {
        (Some(g), None, None) => make_group(g),
        (None, f, p) => MarkedGroup::new(GroupSpec::LocallyFree(Window::new(
            f.unwrap_or(default_window(default).max_family),
            p.unwrap_or(default_window(default).max_position),
        ))),
        (Some(_), _, _) => Err(Error::domain("give either --group or --families/--positions")),
    }
}

fn default_window(spec: &str) -> Window {
    match spec.parse::<GroupSpec>() {
        Ok(GroupSpec::LocallyFree(w)) => w,
        _ => Window::default(),
    }
}

fn check(kind: CheckKind, opts: &CheckOpts) -> Result<Report> {
    match kind {
        CheckKind::Confluence => {
            let g = window_group(opts, "G[3,4]")?;
            let sys = g
                .rewrite_system()
                .ok_or_else(|| Error::domain(format!("{g} has no rewriting system")))?;
            let report = sys.check_local_confluence()?;
            Ok(Report {
                text: format!("group: {g}\n{report}"),
                pass: report.joinable(),
            })
        }
        CheckKind::Termination => {
            let g = window_group(opts, "G[1,3]")?;
            let GroupSpec::LocallyFree(w) = g.spec() else {
                return Err(Error::domain(format!("termination is checked for G windows, not {g}")));
            };
            let sys = RewriteSystem::locally_free(w);
            let report = sys.check_termination(&LenPlusJ, opts.samples, opts.length, opts.seed);
            Ok(Report {
                text: format!("group: {g}\nseed: {}\n{report}", opts.seed),
                pass: report.passed(),
            })
        }
        CheckKind::Axioms => axioms(opts),
        CheckKind::Rho => {
            let n = opts.n;
            let mut failures = Vec::new();
            let relators = 8;
            for m in n - relators..n {
                let image = rho_n(n, &h_relator(m))?;
                if !image.is_empty() {
                    failures.push(format!("relator {m} maps to {image}"));
                }
            }
            let mut images = Vec::new();
            for k in 0..=5 {
                let y = Word::gen(gol_core::word::Gen::indexed("y", n - k));
                let image = rho_n(n, &y)?;
                if image.is_empty() || images.contains(&image) {
                    failures.push(format!("image of {y} is trivial or repeated"));
                }
                images.push(image);
            }
            let mut text = format!(
                "status: {}\nN: {n}\nrelators-checked: {relators}\nimages-checked: {}\nfailures: {}\n",
                status(failures.is_empty()),
                images.len(),
                failures.len()
            );
            for (k, image) in images.iter().enumerate() {
                writeln!(text, "rho(y[{}]): {image}", n - k as i64).unwrap();
            }
            for f in &failures {
                writeln!(text, "{f}").unwrap();
            }
            Ok(Report {
                text,
                pass: failures.is_empty(),
            })
        }
        CheckKind::TauTrace => {
            let g = window_group(opts, "G[1,6]")?;
            let trace = replay_tau_obstruction(&g, opts.family, opts.premise == Premise::Plus)?;
            Ok(Report::pass(format!("group: {g}\nfamily: {}\n{trace}", opts.family)))
        }
    }
}

fn axioms(opts: &CheckOpts) -> Result<Report> {
    let g = Arc::new(window_group(opts, "G[1,6]")?);
    let gens = g.sample_generators();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut failures = Vec::new();
    let mut skipped = 0;
    let len = opts.length.min(8);
    let mut extra = 0;
    if let GroupSpec::LocallyFree(w) = g.spec() {
        // relator of every atom whose successor is in the window
        for a in w.atoms().filter(|a| w.contains(a.succ())) {
            extra += 1;
            if !g.nf(&g_relator(a))?.is_empty() {
                failures.push(format!("relator at {a:?} is not trivial"));
            }
        }
    }
    for _ in 0..opts.samples {
        let mut pick = || {
            let n = rng.gen_range(0..=len);
            random_word(&mut rng, &gens, n)
        };
        let (a, b, c) = (pick(), pick(), pick());
        let outcome = (|| -> Result<Option<String>> {
            if !g.has_canonical_nf() {
                let t = g.tower().expect("only towers lack canonical forms");
                let left = a.concat(&b).concat(&c);
                if !t.equal(&left, &g.nf(&a)?.concat(&g.nf(&b.concat(&c))?))? {
                    return Ok(Some(format!("associativity: {a} | {b} | {c}")));
                }
                if !t.britton_reduce(&a.concat(&a.inverse()))?.is_empty() {
                    return Ok(Some(format!("inverse: {a}")));
                }
                return Ok(None);
            }
            let (x, y, z) = (g.element(&a)?, g.element(&b)?, g.element(&c)?);
            if nf_product(&nf_product(&x, &y)?, &z)? != nf_product(&x, &nf_product(&y, &z)?)? {
                return Ok(Some(format!("associativity: {a} | {b} | {c}")));
            }
            if !nf_product(&x, &nf_inverse(&x)?)?.is_identity() {
                return Ok(Some(format!("inverse: {a}")));
            }
            let e = g.element(&Word::empty())?;
            if nf_product(&e, &x)? != x {
                return Ok(Some(format!("identity: {a}")));
            }
            Ok(None)
        })();
        match outcome {
            Ok(None) => {}
            Ok(Some(f)) => failures.push(f),
            Err(Error::WindowBoundary(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut text = format!(
        "status: {}\ngroup: {g}\nseed: {}\ntriples: {}\nboundary-skips: {skipped}\nrelators-checked: {extra}\nfailures: {}\n",
        status(failures.is_empty()),
        opts.seed,
        opts.samples,
        failures.len()
    );
    for f in &failures {
        writeln!(text, "{f}").unwrap();
    }
    Ok(Report {
        text,
        pass: failures.is_empty(),
    })
}

fn hnn(action: HnnAction, opts: &HnnOpts) -> Result<Report> {
    let tower = match (&opts.g, &opts.h) {
        (Some(g), Some(h)) => TowerGroup::two_element(opts.z, parse_word(g)?, parse_word(h)?)?,
        (None, None) => TowerGroup::fresh(opts.z)?,
        _ => return Err(Error::domain("give both --g and --h, or neither")),
    };
    match action {
        HnnAction::Reduce => {
            let word = opts
                .word
                .as_deref()
                .ok_or_else(|| Error::domain("hnn reduce needs a word"))?;
            let r = tower.britton_reduce(&parse_word(word)?)?;
            Ok(Report::pass(format!(
                "tower: {tower}\nreduced: {r}\nstable-letters: {}\ntrivial: {}\n",
                r.stable_count(),
                r.is_empty()
            )))
        }
        HnnAction::Witness => {
            let c = conjugacy_witness(&tower)?;
            Ok(Report::pass(format!(
                "tower: {tower}\nwitness: {c}\nidentity: {c} ({}) {}' = {}\nverified: true\n",
                tower.sigma(-1),
                c,
                tower.sigma(0)
            )))
        }
        HnnAction::Lambda => {
            let cert = lambda_certificate(&tower, opts.n, opts.m)?;
            cert.verify(&tower)?;
            let n = opts.n;
            let mut text = format!(
                "tower: {tower}\nn: {n}\nM: {}\ncost: {}\nbound: {}\nn^2: {}\ncrossover: {}\nfirst-crossover: {}\nnodes: {}\nverified: true\n",
                opts.m,
                cert.cost(),
                opts.m + 2 * n + 1,
                n * n,
                n * n > cert.cost(),
                crossover(opts.m),
                cert.nodes.len()
            );
            if opts.dump {
                text.push_str("certificate:\n");
                text.push_str(&cert.dump());
            }
            Ok(Report::pass(text))
        }
    }
}
