//! Random program construction and the variation operators.
//!
//! Every operator returns a well-formed program; enforcing the depth limit is
//! the caller's job.

use super::config::GpConfig;
use super::program::{subtree_end, Function, Node, Program};
use rand::Rng;

/// Draws a terminal: a variable with probability `d / (d + 1)`, otherwise a
/// constant from the configured range.
pub fn random_terminal<R: Rng>(n_features: usize, cfg: &GpConfig, rng: &mut R) -> Node {
    let k = rng.random_range(0..=n_features);
    if k < n_features {
        Node::Var(k)
    } else {
        let (lo, hi) = cfg.const_range;
        Node::Const(rng.random_range(lo..hi))
    }
}

fn random_function<R: Rng>(rng: &mut R) -> Function {
    Function::ALL[rng.random_range(0..Function::ALL.len())]
}

fn build<R: Rng>(
    out: &mut Vec<Node>,
    depth: usize,
    max_depth: usize,
    full: bool,
    n_features: usize,
    cfg: &GpConfig,
    rng: &mut R,
) {
    let n_fun = Function::ALL.len();
    let pick_function = if depth == 0 {
        max_depth > 0
    } else if depth >= max_depth {
        false
    } else if full {
        true
    } else {
        rng.random_range(0..n_fun + n_features + 1) < n_fun
    };
    if pick_function {
        let f = random_function(rng);
        out.push(Node::Func(f));
        for _ in 0..f.arity() {
            build(out, depth + 1, max_depth, full, n_features, cfg, rng);
        }
    } else {
        out.push(random_terminal(n_features, cfg, rng));
    }
}

/// A full tree (every branch reaches `depth`) or a grown tree (depth at most
/// `depth`, root always a function).
pub fn random_tree<R: Rng>(depth: usize, full: bool, n_features: usize, cfg: &GpConfig, rng: &mut R) -> Program {
    let mut nodes = Vec::new();
    build(&mut nodes, 0, depth, full, n_features, cfg, rng);
    Program::new(nodes).expect("generated trees are well-formed")
}

/// Ramped half-and-half: depths cycle through the configured range and, per
/// depth, full and grow alternate in blocks. Grown trees shallower than the
/// minimum depth are redrawn.
pub fn init_population<R: Rng>(n_features: usize, cfg: &GpConfig, rng: &mut R) -> Vec<Program> {
    let (lo, hi) = cfg.init_depth;
    let levels = hi - lo + 1;
    (0..cfg.population_size)
        .map(|i| {
            let depth = lo + i % levels;
            let full = (i / levels) % 2 == 0;
            loop {
                let p = random_tree(depth, full, n_features, cfg, rng);
                if p.depth() >= lo {
                    return p;
                }
            }
        })
        .collect()
}

fn splice(base: &[Node], start: usize, end: usize, insert: &[Node]) -> Program {
    let mut nodes = Vec::with_capacity(base.len() - (end - start) + insert.len());
    nodes.extend_from_slice(&base[..start]);
    nodes.extend_from_slice(insert);
    nodes.extend_from_slice(&base[end..]);
    Program::new(nodes).expect("splicing whole subtrees keeps the program well-formed")
}

/// Replaces a uniformly chosen subtree of `parent` with a uniformly chosen
/// subtree of `donor`.
pub fn subtree_crossover<R: Rng>(parent: &Program, donor: &Program, rng: &mut R) -> Program {
    let s = rng.random_range(0..parent.len());
    let e = parent.subtree_end(s);
    let ds = rng.random_range(0..donor.len());
    let de = donor.subtree_end(ds);
    splice(parent.nodes(), s, e, &donor.nodes()[ds..de])
}

/// Replaces a uniformly chosen subtree with a freshly grown tree whose depth
/// is drawn from the initialisation range.
pub fn subtree_mutation<R: Rng>(parent: &Program, n_features: usize, cfg: &GpConfig, rng: &mut R) -> Program {
    let s = rng.random_range(0..parent.len());
    let e = parent.subtree_end(s);
    let depth = rng.random_range(cfg.init_depth.0..=cfg.init_depth.1);
    let fresh = random_tree(depth, false, n_features, cfg, rng);
    splice(parent.nodes(), s, e, fresh.nodes())
}

/// Replaces a uniformly chosen subtree with one of its own subtrees. Never
/// increases node count or depth.
pub fn hoist_mutation<R: Rng>(parent: &Program, rng: &mut R) -> Program {
    let s = rng.random_range(0..parent.len());
    let e = parent.subtree_end(s);
    let hs = rng.random_range(s..e);
    let he = parent.subtree_end(hs);
    splice(parent.nodes(), s, e, &parent.nodes()[hs..he])
}

/// Replaces each node independently with the configured probability: a
/// function by a random function of equal arity, a terminal by a random
/// terminal. Shape is preserved.
pub fn point_mutation<R: Rng>(parent: &Program, n_features: usize, cfg: &GpConfig, rng: &mut R) -> Program {
    let nodes = parent
        .nodes()
        .iter()
        .map(|node| {
            if !rng.random_bool(cfg.p_point_replace) {
                return *node;
            }
            match node {
                Node::Func(f) => {
                    let same: Vec<Function> = Function::ALL.iter().copied().filter(|g| g.arity() == f.arity()).collect();
                    Node::Func(same[rng.random_range(0..same.len())])
                }
                _ => random_terminal(n_features, cfg, rng),
            }
        })
        .collect();
    Program::new(nodes).expect("point mutation keeps arities")
}

/// Nodes of the subtree rooted at `start`, for callers that need raw access.
pub fn subtree(program: &Program, start: usize) -> &[Node] {
    &program.nodes()[start..subtree_end(program.nodes(), start)]
}
