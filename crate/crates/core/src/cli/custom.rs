//! Bundles assembled from user expressions.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bundles::{ExampleBundle, Expected};
use crate::certificate::CertOptions;
use crate::error::Result;
use crate::expr::Vars;
use crate::system::{
    AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, SlowSystem,
};

use super::config::CustomSpec;

pub fn build_custom(spec: &CustomSpec) -> Result<ExampleBundle> {
    let (n, d) = (spec.states, spec.params);
    let field = Arc::new(spec.field.clone());
    let mut frozen = FrozenFamily::new(n, d, move |x, t, tau| {
        let v = Vars { x, t, tau, s: 0.0 };
        field.iter().map(|e| e.eval(&v)).collect()
    });
    if let Some(rows) = &spec.control {
        let rows = Arc::new(rows.clone());
        let m = rows[0].len();
        frozen = frozen.with_control(m, move |x, t, tau| {
            let v = Vars { x, t, tau, s: 0.0 };
            DMatrix::from_fn(n, m, |i, j| rows[i][j].eval(&v))
        });
    }

    let path_exprs = Arc::new(spec.path.clone());
    let mut path = ParameterPath::new(d, move |r| {
        let v = Vars {
            t: r,
            ..Default::default()
        };
        path_exprs.iter().map(|e| e.eval(&v)).collect()
    });
    if let Some(p) = spec.path_period {
        path = path.with_period(p);
    }
    if let Some((lo, hi)) = spec.path_horizon {
        path = path.with_horizon(lo, hi);
    }
    if let Some(p) = spec.p_bar {
        path = path.with_p_bar(p);
    }
    let sys = SlowSystem::new(frozen, path, 1.0)?;

    let scalar = |e: &crate::expr::Expr| {
        let e = e.clone();
        ClassK::new(move |s| {
            e.eval(&Vars {
                s,
                ..Default::default()
            })
        })
    };
    let v_expr = spec.v.clone();
    let q_expr = spec.q.clone();
    let mut family = LyapunovFamily::new(
        move |x, t, tau| v_expr.eval(&Vars { x, t, tau, s: 0.0 }),
        scalar(&spec.alpha1),
        scalar(&spec.alpha2),
        move |tau| {
            q_expr.eval(&Vars {
                tau,
                ..Default::default()
            })
        },
        AveragingData {
            c_a: spec.c_a,
            c_b: spec.c_b,
            window: spec.window,
        },
    );
    if !spec.v.mentions_param() {
        family = family.tau_independent();
    }

    let p_bar = sys.path.p_bar()?;
    let threshold = 2.0 * spec.window * spec.c_a * p_bar / spec.c_b;
    Ok(ExampleBundle {
        name: "custom",
        sys,
        family,
        cert_options: CertOptions {
            m_bar: spec.m_bar,
            sup_grid: None,
        },
        closed_form: None,
        expected: Expected {
            threshold_ugas: threshold,
            ugas_for_all_alpha: threshold == 0.0,
            constants: vec![("p_bar", p_bar)],
            test_alphas: vec![if threshold > 0.0 {
                2.0 * threshold
            } else {
                1.0
            }],
            notes: vec!["user-defined system; derivatives by central differences"],
        },
        horizon: spec.horizon,
        radius: spec.radius,
    })
}
