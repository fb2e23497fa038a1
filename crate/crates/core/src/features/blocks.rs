use serde::{Deserialize, Serialize};

use super::lexer::mask_text;
use super::{is_header_macro, operand_name, parse_directive, FeatureError, ParsedDirective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditional {
    If,
    Ifdef,
    Ifndef,
}

/// One conditional region. Lines are 1-based and refer to the directive
/// lines themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub directive: Conditional,
    /// Controlling feature name; `None` for `#if` and unparseable operands.
    pub feature: Option<String>,
    pub start_line: u32,
    /// First `#elif`/`#else` of the chain, or the closing `#endif`.
    pub then_end_line: u32,
    pub end_line: u32,
    pub depth: u32,
    pub children: Vec<Block>,
}

impl Block {
    fn is_guard(&self) -> bool {
        self.feature.as_deref().is_some_and(is_header_macro)
    }

    /// Lines of the then-branch, directive lines excluded.
    pub fn then_lines(&self) -> std::ops::Range<u32> {
        self.start_line + 1..self.then_end_line
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTree {
    pub blocks: Vec<Block>,
}

impl BlockTree {
    /// Depth-first walk yielding each block with its depth counted over
    /// feature blocks only, so include guards do not add a level.
    pub fn walk(&self) -> Vec<(&Block, u32)> {
        fn go<'a>(b: &'a Block, outer: u32, out: &mut Vec<(&'a Block, u32)>) {
            let depth = if b.is_guard() { outer } else { outer + 1 };
            out.push((b, depth));
            for c in &b.children {
                go(c, depth, out);
            }
        }
        let mut out = Vec::new();
        for b in &self.blocks {
            go(b, 0, &mut out);
        }
        out
    }

    pub fn max_depth(&self) -> u32 {
        fn go(b: &Block) -> u32 {
            b.children.iter().map(go).max().unwrap_or(b.depth).max(b.depth)
        }
        self.blocks.iter().map(go).max().unwrap_or(0)
    }
}

struct Open {
    block: Block,
    then_closed: bool,
}

pub fn build_block_tree(file_text: &str) -> Result<BlockTree, FeatureError> {
    let masked = mask_text(file_text.lines(), false);
    let mut stack: Vec<Open> = Vec::new();
    let mut top: Vec<Block> = Vec::new();
    let (mut openers, mut closers) = (0usize, 0usize);
    let mut broken = false;

    for (i, line) in masked.iter().enumerate() {
        let line_no = i as u32 + 1;
        let Some(directive) = parse_directive(line) else {
            continue;
        };
        match directive {
            ParsedDirective::Open(kind, operand) => {
                openers += 1;
                let (directive, feature) = match kind {
                    Some(super::Directive::Ifdef) => (Conditional::Ifdef, operand_name(&operand)),
                    Some(super::Directive::Ifndef) => (Conditional::Ifndef, operand_name(&operand)),
                    None => (Conditional::If, None),
                };
                stack.push(Open {
                    block: Block {
                        directive,
                        feature,
                        start_line: line_no,
                        then_end_line: 0,
                        end_line: 0,
                        depth: stack.len() as u32 + 1,
                        children: Vec::new(),
                    },
                    then_closed: false,
                });
            }
            ParsedDirective::Elif | ParsedDirective::Else => match stack.last_mut() {
                Some(open) if !open.then_closed => {
                    open.block.then_end_line = line_no;
                    open.then_closed = true;
                }
                Some(_) => {}
                None => broken = true,
            },
            ParsedDirective::Endif => {
                closers += 1;
                match stack.pop() {
                    Some(mut open) => {
                        if !open.then_closed {
                            open.block.then_end_line = line_no;
                        }
                        open.block.end_line = line_no;
                        match stack.last_mut() {
                            Some(parent) => parent.block.children.push(open.block),
                            None => top.push(open.block),
                        }
                    }
                    None => broken = true,
                }
            }
        }
    }

    if broken || !stack.is_empty() || openers != closers {
        return Err(FeatureError::UnbalancedConditionals { openers, closers });
    }
    Ok(BlockTree { blocks: top })
}
