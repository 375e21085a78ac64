use std::fmt;

use crate::neural::CmpOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(f64),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Unary(UnOp::Neg, Box::new(e))
    }
}

/// `var # rhs` as written in a guard.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub var: String,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Guard {
    pub fn new(var: &str, op: CmpOp, rhs: Expr) -> Self {
        Self {
            var: var.to_string(),
            op,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Skip,
    Assign(String, Expr),
    Seq(Box<Stmt>, Box<Stmt>),
    Nif {
        guard: Guard,
        sigma2: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    Nwhile {
        guard: Guard,
        sigma2: Expr,
        body: Box<Stmt>,
    },
    HostCall {
        name: String,
        args: Vec<Expr>,
        result: Option<String>,
    },
}

impl Stmt {
    pub fn assign(name: &str, e: Expr) -> Self {
        Stmt::Assign(name.to_string(), e)
    }

    pub fn seq(first: Stmt, second: Stmt) -> Self {
        Stmt::Seq(Box::new(first), Box::new(second))
    }

    /// Right-nested sequence of `stmts`; empty input is `Skip`.
    pub fn block(stmts: Vec<Stmt>) -> Self {
        let mut iter = stmts.into_iter().rev();
        let Some(last) = iter.next() else {
            return Stmt::Skip;
        };
        iter.fold(last, |acc, s| Stmt::seq(s, acc))
    }

    pub fn nif(guard: Guard, sigma2: Expr, then_branch: Stmt, else_branch: Stmt) -> Self {
        Stmt::Nif {
            guard,
            sigma2,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn nwhile(guard: Guard, sigma2: Expr, body: Stmt) -> Self {
        Stmt::Nwhile {
            guard,
            sigma2,
            body: Box::new(body),
        }
    }

    pub fn call(name: &str, args: Vec<Expr>, result: Option<&str>) -> Self {
        Stmt::HostCall {
            name: name.to_string(),
            args,
            result: result.map(str::to_string),
        }
    }

    /// Flatten a sequence into its statements, left to right.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Stmt::Seq(a, b) => {
                    out.extend(a.statements());
                    cur = b;
                }
                other => {
                    out.push(other);
                    return out;
                }
            }
        }
    }

    /// Guard-bearing statements in pre-order; their index is the stmt-id used in logs.
    pub fn guards(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        collect_guards(self, &mut out);
        out
    }
}

fn collect_guards<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
    match s {
        Stmt::Seq(a, b) => {
            collect_guards(a, out);
            collect_guards(b, out);
        }
        Stmt::Nif {
            then_branch,
            else_branch,
            ..
        } => {
            out.push(s);
            collect_guards(then_branch, out);
            collect_guards(else_branch, out);
        }
        Stmt::Nwhile { body, .. } => {
            out.push(s);
            collect_guards(body, out);
        }
        _ => {}
    }
}

// Printing is fully parenthesised so that parsing the output gives back the
// same tree.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(name) => f.write_str(name),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op, self.rhs)
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_stmt(f, self, 0)
    }
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, depth: usize) -> fmt::Result {
    let pad = "    ".repeat(depth);
    match s {
        Stmt::Skip => write!(f, "{pad}skip"),
        Stmt::Assign(name, e) => write!(f, "{pad}{name} := {e}"),
        Stmt::Seq(a, b) => {
            write_stmt(f, a, depth)?;
            writeln!(f, ";")?;
            write_stmt(f, b, depth)
        }
        Stmt::Nif {
            guard,
            sigma2,
            then_branch,
            else_branch,
        } => {
            writeln!(f, "{pad}nif ({guard}, {sigma2}) {{")?;
            write_stmt(f, then_branch, depth + 1)?;
            writeln!(f)?;
            writeln!(f, "{pad}}} else {{")?;
            write_stmt(f, else_branch, depth + 1)?;
            writeln!(f)?;
            write!(f, "{pad}}}")
        }
        Stmt::Nwhile { guard, sigma2, body } => {
            writeln!(f, "{pad}nwhile ({guard}, {sigma2}) {{")?;
            write_stmt(f, body, depth + 1)?;
            writeln!(f)?;
            write!(f, "{pad}}}")
        }
        Stmt::HostCall { name, args, result } => {
            f.write_str(&pad)?;
            if let Some(r) = result {
                write!(f, "{r} := ")?;
            }
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")
        }
    }
}
