use std::fmt;

/// Analytic quotient `a / sqrt(1 + b^2)`, a smooth stand-in for division that
/// is defined everywhere.
pub fn aq(a: f64, b: f64) -> f64 {
    a / (1.0 + b * b).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Add,
    Sub,
    Mul,
    Aq,
    Sqrt,
    Sin,
}

impl Function {
    pub const ALL: [Function; 6] = [
        Function::Add,
        Function::Sub,
        Function::Mul,
        Function::Aq,
        Function::Sqrt,
        Function::Sin,
    ];

    pub fn arity(self) -> usize {
        match self {
            Function::Sqrt | Function::Sin => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Add => "add",
            Function::Sub => "sub",
            Function::Mul => "mul",
            Function::Aq => "aq",
            Function::Sqrt => "sqrt",
            Function::Sin => "sin",
        }
    }

    #[inline]
    pub fn apply1(self, a: f64) -> f64 {
        match self {
            // protected: sqrt of the magnitude
            Function::Sqrt => a.abs().sqrt(),
            Function::Sin => a.sin(),
            _ => unreachable!("{self:?} is binary"),
        }
    }

    #[inline]
    pub fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Function::Add => a + b,
            Function::Sub => a - b,
            Function::Mul => a * b,
            Function::Aq => aq(a, b),
            _ => unreachable!("{self:?} is unary"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Func(Function),
    /// 0-based input column.
    Var(usize),
    Const(f64),
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Func(f) => f.arity(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("empty program")]
    Empty,
    #[error("malformed prefix sequence at node {0}")]
    Malformed(usize),
}

/// An expression tree stored as a prefix (Polish) sequence of nodes, with its
/// depth cached. The root has depth 0; a full binary tree of depth 2 has 7
/// nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    nodes: Vec<Node>,
    depth: usize,
}

impl Program {
    pub fn new(nodes: Vec<Node>) -> Result<Program, ProgramError> {
        let depth = prefix_depth(&nodes)?;
        Ok(Program { nodes, depth })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Re-derives the structure from the nodes and checks the cached depth.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let depth = prefix_depth(&self.nodes)?;
        assert_eq!(depth, self.depth, "stale depth cache");
        Ok(())
    }

    /// Largest variable index used, plus one; 0 if no variables.
    pub fn n_vars_used(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Var(j) => Some(j + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// End (exclusive) of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        subtree_end(&self.nodes, start)
    }

    /// Evaluates on column-major inputs. Rows are processed together, one
    /// vector per node.
    pub fn eval(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let n = columns.first().map_or(0, Vec::len);
        let mut stack: Vec<Val> = Vec::with_capacity(self.depth + 2);
        for node in self.nodes.iter().rev() {
            let v = match *node {
                Node::Const(c) => Val::Scalar(c),
                Node::Var(j) => Val::Column(&columns[j]),
                Node::Func(f) if f.arity() == 1 => {
                    let a = stack.pop().expect("well-formed");
                    match f {
                        Function::Sqrt => map(a, |x| x.abs().sqrt()),
                        _ => map(a, f64::sin),
                    }
                }
                Node::Func(f) => {
                    // prefix order: the first argument was pushed last
                    let a = stack.pop().expect("well-formed");
                    let b = stack.pop().expect("well-formed");
                    match f {
                        Function::Add => zip_with(a, b, n, |x, y| x + y),
                        Function::Sub => zip_with(a, b, n, |x, y| x - y),
                        Function::Mul => zip_with(a, b, n, |x, y| x * y),
                        _ => zip_with(a, b, n, aq),
                    }
                }
            };
            stack.push(v);
        }
        match stack.pop().expect("non-empty program") {
            Val::Scalar(c) => vec![c; n],
            Val::Column(c) => c.to_vec(),
            Val::Owned(v) => v,
        }
    }

    /// Infix form in the benchmark expression grammar. `aq` is expanded to
    /// its definition and the protected square root to `sqrt(abs(.))`, so the
    /// text evaluates to the same values as the program.
    pub fn to_infix(&self) -> String {
        let mut out = String::new();
        write_infix(&self.nodes, 0, &mut out);
        out
    }
}

enum Val<'a> {
    Scalar(f64),
    Column(&'a [f64]),
    Owned(Vec<f64>),
}

fn map<'a>(a: Val<'a>, op: impl Fn(f64) -> f64) -> Val<'a> {
    match a {
        Val::Scalar(x) => Val::Scalar(op(x)),
        Val::Column(c) => Val::Owned(c.iter().map(|&x| op(x)).collect()),
        Val::Owned(mut v) => {
            v.iter_mut().for_each(|x| *x = op(*x));
            Val::Owned(v)
        }
    }
}

/// Elementwise `op(a, b)`, reusing an owned buffer when there is one.
fn zip_with<'a>(a: Val<'a>, b: Val<'a>, n: usize, op: impl Fn(f64, f64) -> f64) -> Val<'a> {
    match (a, b) {
        (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(op(x, y)),
        (Val::Owned(mut v), b) => {
            match b {
                Val::Scalar(y) => v.iter_mut().for_each(|x| *x = op(*x, y)),
                Val::Column(c) => v.iter_mut().zip(c).for_each(|(x, &y)| *x = op(*x, y)),
                Val::Owned(w) => v.iter_mut().zip(&w).for_each(|(x, &y)| *x = op(*x, y)),
            }
            Val::Owned(v)
        }
        (a, Val::Owned(mut w)) => {
            match a {
                Val::Scalar(x) => w.iter_mut().for_each(|y| *y = op(x, *y)),
                Val::Column(c) => w.iter_mut().zip(c).for_each(|(y, &x)| *y = op(x, *y)),
                Val::Owned(_) => unreachable!("handled above"),
            }
            Val::Owned(w)
        }
        (Val::Scalar(x), Val::Column(c)) => Val::Owned(c.iter().map(|&y| op(x, y)).collect()),
        (Val::Column(c), Val::Scalar(y)) => Val::Owned(c.iter().map(|&x| op(x, y)).collect()),
        (Val::Column(c), Val::Column(d)) => {
            debug_assert_eq!(c.len(), n);
            Val::Owned(c.iter().zip(d).map(|(&x, &y)| op(x, y)).collect())
        }
    }
}

fn write_infix(nodes: &[Node], at: usize, out: &mut String) -> usize {
    match nodes[at] {
        Node::Const(c) if c < 0.0 => {
            out.push_str(&format!("({c:?})"));
            at + 1
        }
        Node::Const(c) => {
            out.push_str(&format!("{c:?}"));
            at + 1
        }
        Node::Var(j) => {
            out.push_str(&format!("x{}", j + 1));
            at + 1
        }
        Node::Func(f @ (Function::Sqrt | Function::Sin)) => {
            out.push_str(if f == Function::Sqrt { "sqrt(abs(" } else { "sin(" });
            let next = write_infix(nodes, at + 1, out);
            out.push_str(if f == Function::Sqrt { "))" } else { ")" });
            next
        }
        Node::Func(Function::Aq) => {
            out.push('(');
            let mid = write_infix(nodes, at + 1, out);
            out.push_str(" / sqrt(1 + ");
            let mut denom = String::new();
            let next = write_infix(nodes, mid, &mut denom);
            out.push_str(&format!("{denom} * {denom}))"));
            next
        }
        Node::Func(f) => {
            let sym = match f {
                Function::Add => " + ",
                Function::Sub => " - ",
                _ => " * ",
            };
            out.push('(');
            let mid = write_infix(nodes, at + 1, out);
            out.push_str(sym);
            let next = write_infix(nodes, mid, out);
            out.push(')');
            next
        }
    }
}

impl fmt::Display for Program {
    /// Prefix form, e.g. `add(mul(x1, 0.5), sin(x2))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(nodes: &[Node], at: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
            match nodes[at] {
                Node::Const(c) => write!(f, "{c:.3}").map(|_| at + 1),
                Node::Var(j) => write!(f, "x{}", j + 1).map(|_| at + 1),
                Node::Func(func) => {
                    write!(f, "{}(", func.name())?;
                    let mut next = at + 1;
                    for k in 0..func.arity() {
                        if k > 0 {
                            f.write_str(", ")?;
                        }
                        next = go(nodes, next, f)?;
                    }
                    f.write_str(")")?;
                    Ok(next)
                }
            }
        }
        go(&self.nodes, 0, f).map(|_| ())
    }
}

pub(crate) fn subtree_end(nodes: &[Node], start: usize) -> usize {
    let mut need = 1usize;
    let mut i = start;
    while need > 0 {
        need = need - 1 + nodes[i].arity();
        i += 1;
    }
    i
}

fn prefix_depth(nodes: &[Node]) -> Result<usize, ProgramError> {
    if nodes.is_empty() {
        return Err(ProgramError::Empty);
    }
    // remaining child slots per open function, innermost last
    let mut open: Vec<usize> = Vec::new();
    let mut depth = 0;
    for (i, node) in nodes.iter().enumerate() {
        if i > 0 && open.is_empty() {
            return Err(ProgramError::Malformed(i));
        }
        depth = depth.max(open.len());
        if let Some(top) = open.last_mut() {
            *top -= 1;
        }
        match node.arity() {
            0 => {
                while open.last() == Some(&0) {
                    open.pop();
                }
            }
            a => open.push(a),
        }
    }
    if !open.is_empty() {
        return Err(ProgramError::Malformed(nodes.len()));
    }
    Ok(depth)
}
