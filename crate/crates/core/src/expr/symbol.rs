//! Symbol table and auxiliary-relation bookkeeping.
//!
//! Every scalar in the engine is a rational function over a single table of
//! symbols. The table assigns each symbol an ordering index (its insertion
//! position) which fixes the canonical monomial order, the pivoting order of
//! the linear algebra, and hence every golden output.

use std::collections::BTreeMap;
use std::fmt;

use super::poly::Poly;

/// Index into the symbol table. Doubles as the ordering index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Dynamical,
    Momentum,
    Parameter,
    Multiplier,
    GaugeParameter,
    Auxiliary,
}

#[derive(Debug, Clone)]
pub struct SymbolInfo {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: Vec<SymbolInfo>,
    by_name: BTreeMap<String, SymbolId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a new symbol. Fails if the name is already taken.
    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<SymbolId, DuplicateSymbol> {
        if self.by_name.contains_key(name) {
            return Err(DuplicateSymbol(name.to_string()));
        }
        let id = SymbolId(self.symbols.len() as u32);
        self.symbols.push(SymbolInfo {
            name: name.to_string(),
            kind,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declare with a name made unique by suffixing if necessary. Used for
    /// engine-generated symbols (multipliers, gauge parameters, auxiliaries).
    pub fn declare_fresh(&mut self, base: &str, kind: SymbolKind) -> SymbolId {
        let mut name = base.to_string();
        let mut n = 1;
        while self.by_name.contains_key(&name) {
            n += 1;
            name = format!("{base}_{n}");
        }
        self.declare(&name, kind).expect("fresh name")
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.index()].name
    }

    pub fn kind(&self, id: SymbolId) -> SymbolKind {
        self.symbols[id.index()].kind
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.symbols.len() as u32).map(SymbolId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("duplicate symbol `{0}`")]
pub struct DuplicateSymbol(pub String);

/// How an auxiliary symbol relates to the base symbols.
///
/// Two families are supported, mirroring what mechanical fixtures need:
/// a sine/cosine pair over a single angle symbol, and a square root of a
/// polynomial with positive sign convention. `Sin` and `Sqrt` carry a square
/// rewrite (`s^2 -> 1 - c^2`, `r^2 -> radicand`) that normalization applies;
/// `Cos` is algebraically free.
#[derive(Debug, Clone, PartialEq)]
pub enum AuxRule {
    Sin { arg: SymbolId, cos: SymbolId },
    Cos { arg: SymbolId, sin: SymbolId },
    Sqrt { radicand: Poly },
}

#[derive(Debug, Clone, Default)]
pub struct RelationSet {
    rules: BTreeMap<SymbolId, AuxRule>,
}

impl RelationSet {
    pub fn insert(&mut self, sym: SymbolId, rule: AuxRule) {
        self.rules.insert(sym, rule);
    }

    pub fn rule(&self, sym: SymbolId) -> Option<&AuxRule> {
        self.rules.get(&sym)
    }

    /// The square-rewrite for `sym`, if it has one: a polynomial q with
    /// `sym^2 = q` on the relation surface.
    pub fn square_rewrite(&self, sym: SymbolId) -> Option<Poly> {
        match self.rules.get(&sym)? {
            AuxRule::Sin { cos, .. } => {
                // s^2 = 1 - c^2
                Some(Poly::one() - Poly::var(*cos) * Poly::var(*cos))
            }
            AuxRule::Cos { .. } => None,
            AuxRule::Sqrt { radicand } => Some(radicand.clone()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &AuxRule)> {
        self.rules.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Symbol table plus relations plus the registries that keep `sin(theta)`
/// or `sqrt(x^2+y^2)` mapped to a single auxiliary across a whole run.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub table: SymbolTable,
    pub relations: RelationSet,
    trig_registry: BTreeMap<SymbolId, (SymbolId, SymbolId)>,
    sqrt_registry: BTreeMap<Poly, SymbolId>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    /// The (sin, cos) auxiliary pair for angle `arg`, creating it on first use.
    pub fn trig_pair(&mut self, arg: SymbolId) -> (SymbolId, SymbolId) {
        if let Some(&pair) = self.trig_registry.get(&arg) {
            return pair;
        }
        let arg_name = self.table.name(arg).to_string();
        let s = self
            .table
            .declare_fresh(&format!("sin_{arg_name}"), SymbolKind::Auxiliary);
        let c = self
            .table
            .declare_fresh(&format!("cos_{arg_name}"), SymbolKind::Auxiliary);
        self.relations.insert(s, AuxRule::Sin { arg, cos: c });
        self.relations.insert(c, AuxRule::Cos { arg, sin: s });
        self.trig_registry.insert(arg, (s, c));
        (s, c)
    }

    /// The radical auxiliary for a polynomial radicand (sign convention > 0),
    /// creating it on first use. An explicitly named radical can be installed
    /// ahead of time with [`Context::register_sqrt_named`].
    pub fn sqrt_aux(&mut self, radicand: &Poly) -> SymbolId {
        if let Some(&r) = self.sqrt_registry.get(radicand) {
            return r;
        }
        let r = self.table.declare_fresh("sqrt", SymbolKind::Auxiliary);
        self.relations.insert(
            r,
            AuxRule::Sqrt {
                radicand: radicand.clone(),
            },
        );
        self.sqrt_registry.insert(radicand.clone(), r);
        r
    }

    /// Install a user-named radical so later `sqrt(...)` occurrences of the
    /// same radicand resolve to it.
    pub fn register_sqrt_named(
        &mut self,
        name: &str,
        radicand: Poly,
    ) -> Result<SymbolId, DuplicateSymbol> {
        let r = self.table.declare(name, SymbolKind::Auxiliary)?;
        self.relations.insert(
            r,
            AuxRule::Sqrt {
                radicand: radicand.clone(),
            },
        );
        self.sqrt_registry.insert(radicand, r);
        Ok(r)
    }

    /// Install user-named trig pair members. Either member may be declared
    /// first; the partner is auto-created when missing.
    pub fn register_trig_named(
        &mut self,
        name: &str,
        arg: SymbolId,
        is_sin: bool,
    ) -> Result<SymbolId, DuplicateSymbol> {
        if let Some(&(s, c)) = self.trig_registry.get(&arg) {
            // Pair exists; renaming is not supported, just return the member.
            return Ok(if is_sin { s } else { c });
        }
        let named = self.table.declare(name, SymbolKind::Auxiliary)?;
        let arg_name = self.table.name(arg).to_string();
        let partner_base = if is_sin {
            format!("cos_{arg_name}")
        } else {
            format!("sin_{arg_name}")
        };
        let partner = self
            .table
            .declare_fresh(&partner_base, SymbolKind::Auxiliary);
        let (s, c) = if is_sin {
            (named, partner)
        } else {
            (partner, named)
        };
        self.relations.insert(s, AuxRule::Sin { arg, cos: c });
        self.relations.insert(c, AuxRule::Cos { arg, sin: s });
        self.trig_registry.insert(arg, (s, c));
        Ok(named)
    }

    pub fn is_auxiliary(&self, id: SymbolId) -> bool {
        self.relations.rule(id).is_some()
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolKind::Dynamical => "dynamical",
            SymbolKind::Momentum => "momentum",
            SymbolKind::Parameter => "parameter",
            SymbolKind::Multiplier => "multiplier",
            SymbolKind::GaugeParameter => "gauge_parameter",
            SymbolKind::Auxiliary => "auxiliary",
        };
        f.write_str(s)
    }
}
