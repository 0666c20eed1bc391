// Core dense types and small shared enums.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ximpact {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

enum class ModelKind { Diagonal, ML, Kyle };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Diagonal: return "diagonal";
        case ModelKind::ML: return "ml";
        case ModelKind::Kyle: return "kyle";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "diagonal" || s == "diag") return ModelKind::Diagonal;
    if (s == "ml") return ModelKind::ML;
    if (s == "kyle") return ModelKind::Kyle;
    throw std::invalid_argument("unknown model kind: " + s);
}

// Which daily volatilities feed the evaluation-day moment reconstruction.
enum class VolMode { SameDay, Lagged };

enum class Segment { InSample, OutOfSample };

inline std::string to_string(Segment s) {
    return s == Segment::InSample ? "in" : "out";
}

}  // namespace ximpact
