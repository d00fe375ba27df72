use crate::config::CheckName;

/// What a check computes and when it passes, for `cosym explain`.
pub fn explain(check: CheckName) -> &'static str {
    match check {
        CheckName::Classify => {
            "Classifies (M, omega, eta) over the grid. Ranks of flat = -omega + eta eta^T and of omega \
             must be constant, ker(flat) must equal ker(omega) ∩ ker(eta), and both forms must be closed \
             within tol_closed. Passes for a cosymplectic or precosymplectic verdict."
        }
        CheckName::Closed => {
            "Largest |d omega| and |d eta| over the grid by central differences. \
             Passes when both are at most tol_closed."
        }
        CheckName::Action => {
            "Torus action axioms (identity, composition, fundamental fields as derivatives of the action) \
             on random points, then theta* omega = omega and theta* eta = eta for random theta. \
             Passes when every residual is at most tol_action."
        }
        CheckName::Moment => {
            "eta(xi_M) = 0, d mu^xi = iota(xi_M) omega and torus invariance of mu on the grid, plus the \
             null ideal of generators with flat(xi_M) = 0 compared to the declared subtorus."
        }
        CheckName::Clean => {
            "At sample points, the tangent space of the null-ideal orbit equals the intersection of the \
             full orbit tangent space with ker(flat). Needs a successful classification."
        }
        CheckName::Body => {
            "Moment image over the grid, clipped to the configured box. Reports hull vertices and facet \
             halfspaces flagged as image, clip box or chart truncation. Passes when every sample lies in \
             the hull and the midpoint of random sample pairs lies in it to 1e-7."
        }
        CheckName::Morse => {
            "Critical set of each moment component mu^xi, clustered into components, with tangent \
             dimension, normal Hessian index and nullity. Passes when every component is nondegenerate \
             and every index is even."
        }
        CheckName::QuasiIso => {
            "At sample points, the anchor of the foliation is injective and its image equals ker(flat)."
        }
        CheckName::Basic => {
            "omega and eta are horizontal (iota_v omega = 0, eta(v) = 0) and invariant along every spanning \
             field of the foliation. Passes when all residuals are at most tol_action."
        }
        CheckName::Orbit => {
            "Walks along the leaf through a start point by random flows of the spanning fields and reruns \
             quasi_iso at each step. The start point must pass quasi_iso first."
        }
        CheckName::Arrow => {
            "On the arrow chart of the submersion groupoid, s* omega = t* omega and ker(flat) of the arrow \
             forms equals ker ds + ker dt at random arrows, within tol_arrow."
        }
        CheckName::Holonomy => {
            "Iterates the return map of the closed leaf on a transversal from a test point and reports \
             Trivial, CyclicFinite(q) or InfiniteCyclic when no return occurs within holonomy_n_max steps. \
             Informational: passes whenever the descriptor is computed."
        }
        CheckName::Reduce => {
            "Pulls (omega, eta) back to a slice of the zero level of mu and classifies the result. Passes \
             when the reduced structure is cosymplectic, the reduced eta is closed to 1e-8 and nowhere \
             zero, and a torus-rotated slice gives the same forms to 1e-7."
        }
    }
}
