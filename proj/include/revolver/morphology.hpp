#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "revolver/kinematic_tree.hpp"

namespace revolver {

// Flat vector of all interpolatable parameters in canonical pre-order:
// per body (length x,y,z, mass, inertia x,y,z), then for every non-root
// body the enclosing joint (motor, damping, range lo, range hi).
struct ParamVector {
    std::vector<double> values;
};

struct RobotModel {
    KinematicTree tree;
    double beta = 0.0;
    std::string family_id;
};

// Result of matching two kinematic trees. Both augmented trees are stored in
// one canonical order (pre-order, children sorted by source-side name), so
// node i of the source pairs with node i of the target and the two trees have
// identical parent arrays. Added nodes carry all-zero parameters; an added
// joint keeps the axis of its real partner so axis interpolation never starts
// from an undefined direction.
struct MorphologyCorrespondence {
    KinematicTree augmented_source;
    KinematicTree augmented_target;
    std::vector<std::pair<int, int>> node_pairs;
    std::vector<int> added_in_source;
    std::vector<int> added_in_target;

    // original node/joint index -> canonical augmented index
    std::vector<int> source_node_map;
    std::vector<int> target_node_map;
    std::vector<int> source_joint_map;
    std::vector<int> target_joint_map;

    int shared_joint_count() const { return augmented_source.joint_count(); }

    // Checks the correspondence invariants (bijection, depth and parent
    // consistency under the pairing, zero parameters on added nodes).
    void validate() const;
};

// Augments both trees with zero-parameter nodes until they are isomorphic.
// Root pairs are searched exhaustively; the added-node count is minimized,
// ties broken by L2 distance between paired parameters, then by keeping the
// declared roots, then by lexicographic node names.
MorphologyCorrespondence match_morphology(const KinematicTree& source,
                                          const KinematicTree& target);

std::pair<ParamVector, ParamVector> flatten_params(const MorphologyCorrespondence& corr);

using InterpSchedule = std::function<double(double)>;

// theta(alpha) = (1 - f(alpha)) * theta_S + f(alpha) * theta_T, materialized
// as a robot. Exact endpoints reproduce the augmented trees bit for bit.
// The default schedule is linear, f(alpha) = alpha.
RobotModel interpolate(const MorphologyCorrespondence& corr, double alpha,
                       const InterpSchedule& schedule = InterpSchedule());

enum class Side { Source, Target };

// Zero-padding embeddings between an original robot's vectors and the shared
// augmented space. Action vectors are indexed by joint; state vectors must be
// a whole number of per-joint blocks (q, or q and qdot stacked).
std::vector<double> pad_action(const std::vector<double>& v,
                               const MorphologyCorrespondence& corr, Side side);
std::vector<double> unpad_action(const std::vector<double>& v,
                                 const MorphologyCorrespondence& corr, Side side);
std::vector<double> pad_state(const std::vector<double>& v,
                              const MorphologyCorrespondence& corr, Side side);
std::vector<double> unpad_state(const std::vector<double>& v,
                                const MorphologyCorrespondence& corr, Side side);

}  // namespace revolver
