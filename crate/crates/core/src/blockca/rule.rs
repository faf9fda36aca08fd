use std::collections::HashMap;
use std::fmt::Write as _;

use super::BlockcaError;

/// Symbol of a cell alphabet; values are `0..alphabet`.
pub type Symbol = u16;

/// Block corners in NW, NE, SE, SW order.
pub type Block = [Symbol; 4];

pub const NW: usize = 0;
pub const NE: usize = 1;
pub const SE: usize = 2;
pub const SW: usize = 3;

/// One-dimensional block rule `(x, y) -> (f(x, y), g(x, y))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockRule1D {
    alphabet: usize,
    f: Vec<Symbol>,
    g: Vec<Symbol>,
}

impl BlockRule1D {
    pub fn from_fn(
        alphabet: usize,
        mut rule: impl FnMut(Symbol, Symbol) -> (Symbol, Symbol),
    ) -> Result<Self, BlockcaError> {
        check_alphabet(alphabet)?;
        let mut f = Vec::with_capacity(alphabet * alphabet);
        let mut g = Vec::with_capacity(alphabet * alphabet);
        for x in 0..alphabet as Symbol {
            for y in 0..alphabet as Symbol {
                let (a, b) = rule(x, y);
                for v in [a, b] {
                    if v as usize >= alphabet {
                        return Err(BlockcaError::SymbolOutOfRange { symbol: v, alphabet });
                    }
                }
                f.push(a);
                g.push(b);
            }
        }
        Ok(Self { alphabet, f, g })
    }

    pub fn identity(alphabet: usize) -> Result<Self, BlockcaError> {
        Self::from_fn(alphabet, |x, y| (x, y))
    }

    /// Binary rule with `f = g = x xor y`.
    pub fn xor() -> Self {
        Self::from_fn(2, |x, y| (x ^ y, x ^ y)).expect("binary xor rule")
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn apply(&self, x: Symbol, y: Symbol) -> (Symbol, Symbol) {
        let i = x as usize * self.alphabet + y as usize;
        (self.f[i], self.g[i])
    }

    pub fn f(&self, x: Symbol, y: Symbol) -> Symbol {
        self.apply(x, y).0
    }

    pub fn g(&self, x: Symbol, y: Symbol) -> Symbol {
        self.apply(x, y).1
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("rule1d\nalphabet {}\n", self.alphabet);
        for x in 0..self.alphabet as Symbol {
            for y in 0..self.alphabet as Symbol {
                let (f, g) = self.apply(x, y);
                let _ = writeln!(out, "{x} {y} -> {f} {g}");
            }
        }
        out
    }
}

/// What happens to blocks that stick out of a bounded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryRule {
    /// Partial blocks are left unchanged: walls reflect and never move.
    #[default]
    Fixed,
}

/// Two-dimensional block rule on 2x2 blocks, corners NW, NE, SE, SW.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockRule2D {
    alphabet: usize,
    table: Vec<Block>,
    boundary: BoundaryRule,
}

/// Outcome of [`invert_rule2d`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inversion {
    Bijective(BlockRule2D),
    /// Two distinct inputs with the same image.
    NotBijective { first: Block, second: Block, image: Block },
}

impl BlockRule2D {
    pub fn from_fn(
        alphabet: usize,
        mut rule: impl FnMut(Block) -> Block,
    ) -> Result<Self, BlockcaError> {
        check_alphabet(alphabet)?;
        let n = alphabet.pow(4);
        let mut table = Vec::with_capacity(n);
        for i in 0..n {
            let out = rule(decode_block(i, alphabet));
            for &v in &out {
                if v as usize >= alphabet {
                    return Err(BlockcaError::SymbolOutOfRange { symbol: v, alphabet });
                }
            }
            table.push(out);
        }
        Ok(Self { alphabet, table, boundary: BoundaryRule::Fixed })
    }

    pub fn identity(alphabet: usize) -> Result<Self, BlockcaError> {
        Self::from_fn(alphabet, |b| b)
    }

    pub fn with_boundary(mut self, boundary: BoundaryRule) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn boundary(&self) -> BoundaryRule {
        self.boundary
    }

    pub fn block_count(&self) -> usize {
        self.table.len()
    }

    /// All blocks in table order.
    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.table.len()).map(|i| decode_block(i, self.alphabet))
    }

    pub fn index(&self, block: Block) -> usize {
        encode_block(block, self.alphabet)
    }

    pub fn apply(&self, block: Block) -> Block {
        self.table[self.index(block)]
    }

    /// Update of a block whose `real` corners lie on the grid.
    pub fn apply_partial(&self, block: Block, real: [bool; 4]) -> Block {
        if real.iter().all(|&r| r) {
            return self.apply(block);
        }
        match self.boundary {
            BoundaryRule::Fixed => block,
        }
    }

    /// All blocks mapped onto `image`.
    pub fn preimages(&self, image: Block) -> Vec<Block> {
        self.blocks().filter(|&b| self.apply(b) == image).collect()
    }

    /// Preimages of a partial block, compared on real corners only.
    pub fn partial_preimages(&self, image: Block, real: [bool; 4]) -> Vec<Block> {
        if real.iter().all(|&r| r) {
            return self.preimages(image);
        }
        let mask = |b: Block| -> Block {
            let mut m = b;
            for k in 0..4 {
                if !real[k] {
                    m[k] = 0;
                }
            }
            m
        };
        let target = mask(image);
        self.blocks()
            .filter(|&b| mask(b) == b)
            .filter(|&b| mask(self.apply_partial(b, real)) == target)
            .collect()
    }

    pub fn is_bijective(&self) -> bool {
        matches!(invert_rule2d(self), Inversion::Bijective(_))
    }

    /// Number of cells holding `symbol` is preserved by every block.
    pub fn conserves(&self, symbol: Symbol) -> bool {
        let count = |b: &Block| b.iter().filter(|&&v| v == symbol).count();
        self.blocks().all(|b| count(&b) == count(&self.apply(b)))
    }

    /// Invariance under the 4 rotations and 2 reflections of the block.
    pub fn is_symmetric(&self) -> bool {
        let transforms: [fn(Block) -> Block; 2] = [rotate_cw, reflect_vertical_axis];
        self.blocks().all(|b| {
            transforms
                .iter()
                .all(|t| self.apply(t(b)) == t(self.apply(b)))
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("rule2d\nalphabet {}\nboundary fixed\n", self.alphabet);
        for b in self.blocks() {
            let o = self.apply(b);
            let _ = writeln!(
                out,
                "{} {} {} {} -> {} {} {} {}",
                b[0], b[1], b[2], b[3], o[0], o[1], o[2], o[3]
            );
        }
        out
    }
}

/// Rotation by 90 degrees clockwise.
pub fn rotate_cw(b: Block) -> Block {
    [b[SW], b[NW], b[NE], b[SE]]
}

/// Mirror image across the vertical axis.
pub fn reflect_vertical_axis(b: Block) -> Block {
    [b[NE], b[NW], b[SW], b[SE]]
}

pub fn invert_rule2d(rule: &BlockRule2D) -> Inversion {
    let mut inverse: Vec<Option<Block>> = vec![None; rule.table.len()];
    for b in rule.blocks() {
        let image = rule.apply(b);
        let slot = &mut inverse[rule.index(image)];
        if let Some(first) = *slot {
            return Inversion::NotBijective { first, second: b, image };
        }
        *slot = Some(b);
    }
    let table = inverse.into_iter().map(|b| b.expect("bijection covers every block")).collect();
    Inversion::Bijective(BlockRule2D { alphabet: rule.alphabet, table, boundary: rule.boundary })
}

pub fn bbm_rule() -> BlockRule2D {
    parse_rule2d(include_str!("../../data/bbm.rule")).expect("bundled bbm table")
}

pub fn critters_rule() -> BlockRule2D {
    parse_rule2d(include_str!("../../data/critters.rule")).expect("bundled critters table")
}

fn check_alphabet(alphabet: usize) -> Result<(), BlockcaError> {
    if alphabet == 0 || alphabet > 64 {
        return Err(BlockcaError::BadAlphabet(alphabet));
    }
    Ok(())
}

fn encode_block(b: Block, n: usize) -> usize {
    b.iter().fold(0, |acc, &v| acc * n + v as usize)
}

fn decode_block(mut i: usize, n: usize) -> Block {
    let mut b = [0; 4];
    for k in (0..4).rev() {
        b[k] = (i % n) as Symbol;
        i /= n;
    }
    b
}

/// Either kind of rule read from a text table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleFile {
    OneD(BlockRule1D),
    TwoD(BlockRule2D),
}

pub fn parse_rule(text: &str) -> Result<RuleFile, BlockcaError> {
    let mut lines = content_lines(text);
    let (n, kind) = lines.next().ok_or_else(|| parse_err(0, "empty rule file"))?;
    match kind {
        "rule1d" => parse_rule1d(text).map(RuleFile::OneD),
        "rule2d" => parse_rule2d(text).map(RuleFile::TwoD),
        other => Err(parse_err(n, &format!("unknown rule kind '{other}'"))),
    }
}

pub fn parse_rule1d(text: &str) -> Result<BlockRule1D, BlockcaError> {
    let (alphabet, rows) = parse_table(text, "rule1d", 2)?;
    let mut map = HashMap::new();
    for (line, input, output) in rows {
        if map.insert((input[0], input[1]), (output[0], output[1])).is_some() {
            return Err(parse_err(line, "duplicate entry"));
        }
    }
    let mut missing = None;
    let rule = BlockRule1D::from_fn(alphabet, |x, y| {
        *map.get(&(x, y)).unwrap_or_else(|| {
            missing.get_or_insert((x, y));
            &(0, 0)
        })
    })?;
    if let Some((x, y)) = missing {
        return Err(parse_err(0, &format!("no entry for ({x}, {y})")));
    }
    Ok(rule)
}

pub fn parse_rule2d(text: &str) -> Result<BlockRule2D, BlockcaError> {
    let (alphabet, rows) = parse_table(text, "rule2d", 4)?;
    let mut map = HashMap::new();
    for (line, input, output) in rows {
        let i: Block = [input[0], input[1], input[2], input[3]];
        let o: Block = [output[0], output[1], output[2], output[3]];
        if map.insert(i, o).is_some() {
            return Err(parse_err(line, "duplicate entry"));
        }
    }
    let mut missing = None;
    let rule = BlockRule2D::from_fn(alphabet, |b| {
        *map.get(&b).unwrap_or_else(|| {
            missing.get_or_insert(b);
            &[0; 4]
        })
    })?;
    if let Some(b) = missing {
        return Err(parse_err(0, &format!("no entry for {b:?}")));
    }
    Ok(rule)
}

type Row = (usize, Vec<Symbol>, Vec<Symbol>);

fn parse_table(text: &str, kind: &str, arity: usize) -> Result<(usize, Vec<Row>), BlockcaError> {
    let mut alphabet = None;
    let mut rows = Vec::new();
    let mut seen_kind = false;
    for (n, line) in content_lines(text) {
        let mut words = line.split_whitespace();
        match words.next() {
            Some(k) if k == kind && !seen_kind => seen_kind = true,
            Some("alphabet") => {
                let v = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| parse_err(n, "bad alphabet"))?;
                alphabet = Some(v);
            }
            Some("boundary") => match words.next() {
                Some("fixed") => {}
                _ => return Err(parse_err(n, "unknown boundary rule")),
            },
            _ => {
                let (lhs, rhs) = line
                    .split_once("->")
                    .ok_or_else(|| parse_err(n, "expected 'inputs -> outputs'"))?;
                let input = symbols(lhs, n)?;
                let output = symbols(rhs, n)?;
                if input.len() != arity || output.len() != arity {
                    return Err(parse_err(n, &format!("expected {arity} symbols per side")));
                }
                rows.push((n, input, output));
            }
        }
    }
    if !seen_kind {
        return Err(parse_err(0, &format!("missing '{kind}' header")));
    }
    let alphabet = alphabet.ok_or_else(|| parse_err(0, "missing alphabet"))?;
    check_alphabet(alphabet)?;
    for (n, i, o) in &rows {
        if i.iter().chain(o).any(|&v| v as usize >= alphabet) {
            return Err(parse_err(*n, "symbol outside alphabet"));
        }
    }
    Ok((alphabet, rows))
}

fn symbols(s: &str, line: usize) -> Result<Vec<Symbol>, BlockcaError> {
    s.split_whitespace()
        .map(|w| w.parse().map_err(|_| parse_err(line, &format!("bad symbol '{w}'"))))
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_err(line: usize, msg: &str) -> BlockcaError {
    BlockcaError::Parse { line, message: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_codec_roundtrip() {
        for n in 1..5 {
            for i in 0..n * n * n * n {
                assert_eq!(encode_block(decode_block(i, n), n), i);
            }
        }
    }

    #[test]
    fn rotation_has_order_four() {
        let b = [1, 2, 3, 4];
        let r = rotate_cw(b);
        assert_eq!(r, [4, 1, 2, 3]);
        assert_eq!(rotate_cw(rotate_cw(rotate_cw(r))), b);
    }

    #[test]
    fn text_roundtrip() {
        let r = bbm_rule();
        assert_eq!(parse_rule2d(&r.to_text()).unwrap(), r);
        let x = BlockRule1D::xor();
        assert_eq!(parse_rule1d(&x.to_text()).unwrap(), x);
        assert!(matches!(parse_rule(&x.to_text()).unwrap(), RuleFile::OneD(_)));
    }

    #[test]
    fn incomplete_table_is_rejected() {
        assert!(parse_rule1d("rule1d\nalphabet 2\n0 0 -> 0 0\n").is_err());
    }
}
