use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::RuntimeError;
use crate::gauss::RngStream;
use crate::neural::{self, GuardResult};

use super::ast::{BinOp, Expr, Guard, Stmt, UnOp};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Variable store. Ordered so dumps are stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store(BTreeMap<String, f64>);

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        if let Some(slot) = self.0.get_mut(name) {
            *slot = value;
        } else {
            self.0.insert(name.to_string(), value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<const N: usize> From<[(&str, f64); N]> for Store {
    fn from(pairs: [(&str, f64); N]) -> Self {
        let mut s = Store::new();
        for (k, v) in pairs {
            s.set(k, v);
        }
        s
    }
}

/// Host function: receives evaluated arguments and the variable store, returns a value
/// that is assigned when the call has a result variable.
pub type HostFn = Box<dyn FnMut(&[f64], &mut Store) -> Result<f64, String>>;

/// One evaluated guard, in execution order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardEvent {
    pub stmt_id: usize,
    pub result: GuardResult,
}

impl GuardEvent {
    /// Tab-separated: stmt-id, diff, sigma2, prob, q1, q2, sample, taken.
    pub fn log_line(&self) -> String {
        let r = &self.result;
        let (q1, q2) = r.interval.describe();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.stmt_id,
            r.diff,
            r.sigma2,
            r.prob,
            q1,
            q2,
            r.drawn_sample,
            u8::from(r.taken)
        )
    }
}

/// Interpreter state: store, host table, random stream and step budget.
pub struct Env {
    pub store: Store,
    hosts: HashMap<String, HostFn>,
    rng: RngStream,
    budget: u64,
    record: bool,
    events: Vec<GuardEvent>,
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut hosts: Vec<&String> = self.hosts.keys().collect();
        hosts.sort();
        f.debug_struct("Env")
            .field("store", &self.store)
            .field("hosts", &hosts)
            .field("budget", &self.budget)
            .finish_non_exhaustive()
    }
}

impl Env {
    pub fn new(seed: u64) -> Self {
        Self::with_rng(RngStream::new(seed))
    }

    pub fn with_rng(rng: RngStream) -> Self {
        Self {
            store: Store::new(),
            hosts: HashMap::new(),
            rng,
            budget: DEFAULT_STEP_BUDGET,
            record: false,
            events: Vec::new(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_store(mut self, store: Store) -> Self {
        self.store = store;
        self
    }

    /// Keep a [`GuardEvent`] for every guard evaluation.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn remaining_budget(&self) -> u64 {
        self.budget
    }

    pub fn events(&self) -> &[GuardEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<GuardEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn bind_host<F>(&mut self, name: &str, f: F) -> Result<(), RuntimeError>
    where
        F: FnMut(&[f64], &mut Store) -> Result<f64, String> + 'static,
    {
        if self.hosts.contains_key(name) {
            return Err(RuntimeError::DuplicateHost(name.to_string()));
        }
        self.hosts.insert(name.to_string(), Box::new(f));
        Ok(())
    }

    pub fn eval(&self, e: &Expr) -> Result<f64, RuntimeError> {
        eval_expr(e, &self.store)
    }

    /// Run `program` against this environment.
    pub fn exec(&mut self, program: &Stmt) -> Result<(), RuntimeError> {
        let ids: HashMap<*const Stmt, usize> = program
            .guards()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s as *const Stmt, i))
            .collect();
        self.exec_stmt(program, &ids)
    }

    fn tick(&mut self) -> Result<(), RuntimeError> {
        if self.budget == 0 {
            return Err(RuntimeError::BudgetExhausted);
        }
        self.budget -= 1;
        Ok(())
    }

    fn guard(
        &mut self,
        stmt: &Stmt,
        guard: &Guard,
        sigma2: &Expr,
        ids: &HashMap<*const Stmt, usize>,
    ) -> Result<bool, RuntimeError> {
        self.tick()?;
        let x = self.store.get(&guard.var).ok_or_else(|| RuntimeError::UnboundVariable(guard.var.clone()))?;
        let a = self.eval(&guard.rhs)?;
        let s2 = self.eval(sigma2)?;
        let result = neural::check(x, a, s2, guard.op, &mut self.rng)?;
        if self.record {
            self.events.push(GuardEvent {
                stmt_id: ids.get(&(stmt as *const Stmt)).copied().unwrap_or(usize::MAX),
                result,
            });
        }
        Ok(result.taken)
    }

    fn exec_stmt(&mut self, s: &Stmt, ids: &HashMap<*const Stmt, usize>) -> Result<(), RuntimeError> {
        match s {
            Stmt::Skip => self.tick(),
            Stmt::Assign(name, e) => {
                self.tick()?;
                let v = self.eval(e)?;
                self.store.set(name, v);
                Ok(())
            }
            Stmt::Seq(a, b) => {
                self.exec_stmt(a, ids)?;
                self.exec_stmt(b, ids)
            }
            Stmt::Nif {
                guard,
                sigma2,
                then_branch,
                else_branch,
            } => {
                if self.guard(s, guard, sigma2, ids)? {
                    self.exec_stmt(then_branch, ids)
                } else {
                    self.exec_stmt(else_branch, ids)
                }
            }
            Stmt::Nwhile { guard, sigma2, body } => {
                while self.guard(s, guard, sigma2, ids)? {
                    self.exec_stmt(body, ids)?;
                }
                Ok(())
            }
            Stmt::HostCall { name, args, result } => {
                self.tick()?;
                let values = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                let f = self
                    .hosts
                    .get_mut(name)
                    .ok_or_else(|| RuntimeError::UnknownHost(name.clone()))?;
                let out = f(&values, &mut self.store).map_err(|message| RuntimeError::Host {
                    name: name.clone(),
                    message,
                })?;
                if let Some(var) = result {
                    self.store.set(var, out);
                }
                Ok(())
            }
        }
    }
}

pub fn eval_expr(e: &Expr, store: &Store) -> Result<f64, RuntimeError> {
    match e {
        Expr::Var(name) => store.get(name).ok_or_else(|| RuntimeError::UnboundVariable(name.clone())),
        Expr::Const(c) => Ok(*c),
        Expr::Unary(UnOp::Neg, inner) => Ok(-eval_expr(inner, store)?),
        Expr::Binary(op, l, r) => {
            let l = eval_expr(l, store)?;
            let r = eval_expr(r, store)?;
            match op {
                BinOp::Add => Ok(l + r),
                BinOp::Sub => Ok(l - r),
                BinOp::Mul => Ok(l * r),
                BinOp::Div if r == 0.0 => Err(RuntimeError::DivisionByZero),
                BinOp::Div => Ok(l / r),
            }
        }
    }
}
