use drawdash::layout::{label_collisions, layout_flow, resolve_label_overlaps, DEFAULT_MAX_ITERS};
use drawdash::scene::{Element, Point, Scene};
use drawdash::LayoutConfig;
use proptest::prelude::*;

fn apply(scene: &Scene, moves: Vec<drawdash::layout::Move>) -> Scene {
    let mut out = scene.clone();
    for m in moves {
        out.get_mut(&m.id).unwrap().at = Some(m.to);
    }
    out
}

proptest! {
    #[test]
    fn flow_spaces_chain_evenly(points in prop::collection::vec((-500.0f64..500.0, -500.0f64..500.0), 1..8)) {
        let cfg = LayoutConfig::default();
        let elements: Vec<Element> = points
            .iter()
            .enumerate()
            .map(|(k, (x, y))| Element::node(format!("b{k}"), format!("box {k}"), Point::new(*x, *y)))
            .collect();
        let scene = Scene { version: 0, elements };
        let chain: Vec<String> = (0..points.len()).map(|k| format!("b{k}")).collect();
        let laid = apply(&scene, layout_flow(&scene, &chain, &cfg).unwrap());
        let at: Vec<Point> = chain.iter().map(|id| laid.get(id).unwrap().at.unwrap()).collect();
        prop_assert_eq!(at[0], Point::new(points[0].0, points[0].1));
        for w in at.windows(2) {
            prop_assert!((w[1].x - w[0].x - cfg.layer_gap).abs() < 1e-9);
            prop_assert_eq!(w[1].y, w[0].y);
        }
    }

    #[test]
    fn label_pass_only_moves_text(points in prop::collection::vec((-60.0f64..60.0, -60.0f64..60.0, any::<bool>()), 2..10)) {
        let elements: Vec<Element> = points
            .iter()
            .enumerate()
            .map(|(k, (x, y, is_text))| {
                let at = Point::new(*x, *y);
                if *is_text { Element::text(format!("t{k}"), format!("label {k}"), at) } else { Element::node(format!("n{k}"), "", at) }
            })
            .collect();
        let scene = Scene { version: 0, elements };
        let before = label_collisions(&scene).len();
        let moves = resolve_label_overlaps(&scene, DEFAULT_MAX_ITERS);
        for m in &moves {
            prop_assert!(m.id.starts_with('t'), "moved non-text {}", m.id);
        }
        let after = label_collisions(&apply(&scene, moves)).len();
        prop_assert!(after <= before);
    }
}

#[test]
fn unknown_chain_member_is_an_error() {
    let scene = Scene { version: 0, elements: vec![Element::node("a", "A", Point::new(0.0, 0.0))] };
    assert!(layout_flow(&scene, &["a".into(), "zz".into()], &LayoutConfig::default()).is_err());
}
