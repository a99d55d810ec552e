//! Model manifolds, curvature at a point, exponential maps and the rescaled
//! normal-coordinate charts on the unit ball.

pub mod chart;
pub mod curvature;
pub mod geodesic;
pub mod manifold;

pub use chart::{
    pullback_ball_chart, pullback_ball_chart_in, pullback_ball_chart_numeric,
    pullback_ellipsoid_chart, MetricChart, DEFAULT_DOMAIN_RADIUS,
};
pub use curvature::{
    curvature_at, curvature_numeric, orthonormal_frame, ricci_frame, CurvaturePacket, NormalFrame,
};
pub use geodesic::{exp_map, exp_map_numeric, geodesic_distance, log_map};
pub use manifold::{CustomChart, MetricFn, ModelManifold};
