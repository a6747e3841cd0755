//! Scene builders shared by the benches.

use drawdash::{Element, EditOp, EditScript, Point, Scene};

/// A heap-shaped tree of `n` nodes rooted at `v0`, with scrambled positions.
pub fn heap_tree(n: usize) -> Scene {
    let mut elements = Vec::with_capacity(2 * n);
    for k in 0..n {
        let x = ((k * 7919) % 613) as f64 - 300.0;
        elements.push(Element::node(format!("v{k}"), k.to_string(), Point::new(x, (k % 5) as f64 * 30.0)));
        if k > 0 {
            elements.push(Element::edge(format!("l{k}"), format!("v{}", (k - 1) / 2), format!("v{k}")));
        }
    }
    Scene { version: 0, elements }
}

/// A script of `n` adds followed by `n` moves of the same ids.
pub fn churn_script(n: usize, base_version: u64) -> EditScript {
    let mut ops = Vec::with_capacity(2 * n);
    for k in 0..n {
        ops.push(EditOp::Add(Element::node(format!("b{k}"), format!("box {k}"), Point::new(k as f64 * 90.0, 0.0))));
    }
    for k in 0..n {
        ops.push(EditOp::Move {
            id: format!("b{k}"),
            to: Point::new(k as f64 * 90.0, 120.0),
        });
    }
    EditScript::new(base_version, ops)
}
