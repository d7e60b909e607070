#pragma once

#include "slowft/errors.hpp"
#include "slowft/numeric.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace slowft {

// x -> ratio * x + translation, orientation preserving, mapping [0,1] into itself.
class SimilarityMap {
public:
    SimilarityMap(Rational ratio, Rational translation);

    const Rational& ratio() const { return ratio_; }
    const Rational& translation() const { return translation_; }

    Rational apply(const Rational& x) const { return ratio_ * x + translation_; }
    // Preimage of y (may fall outside [0,1]).
    Rational invert(const Rational& y) const { return (y - translation_) / ratio_; }
    Rational fixed_point() const { return translation_ / (1 - ratio_); }
    // (*this) o inner
    SimilarityMap compose(const SimilarityMap& inner) const;

    bool operator==(const SimilarityMap&) const = default;

private:
    Rational ratio_;
    Rational translation_;
};

struct Word {
    std::vector<std::uint32_t> letters;

    std::size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    bool operator==(const Word&) const = default;
    auto operator<=>(const Word&) const = default;
};

std::string to_string(const Word& w);

struct Interval {
    Rational lo;
    Rational hi;
};

class SelfSimilarIFS {
public:
    SelfSimilarIFS(std::vector<SimilarityMap> maps, std::vector<Rational> probs);

    std::size_t size() const { return maps_.size(); }
    const std::vector<SimilarityMap>& maps() const { return maps_; }
    const std::vector<Rational>& probs() const { return probs_; }
    const SimilarityMap& map(std::size_t a) const { return maps_.at(a); }

    // Convex hull of the attractor: [min fixed point, max fixed point].
    const Interval& hull() const { return hull_; }
    // Barycentre of the invariant measure.
    const Rational& mean() const { return mean_; }
    Rational min_ratio() const;
    Rational max_ratio() const;

    // Common ratio 1/b with integer b when every map has it.
    std::optional<long> homogeneous_base() const;

    // Hull of the cylinder S_w(attractor).
    Interval cylinder_hull(const SimilarityMap& composed) const;

private:
    std::vector<SimilarityMap> maps_;
    std::vector<Rational> probs_;
    Interval hull_;
    Rational mean_;
};

// Standard families.
SelfSimilarIFS cantor_ifs();
// {x/10, (x+1)/10, (x+t)/10}, uniform weights; t in [0,1].
SelfSimilarIFS mu_t_ifs(const Rational& t);
// Digit maps x -> (x + d)/b, uniform weights.
SelfSimilarIFS missing_digit_ifs(long base, const std::vector<long>& digits);

SelfSimilarIFS ifs_from_json(const nlohmann::json& j);
nlohmann::json ifs_to_json(const SelfSimilarIFS& ifs);

// S_{a_1} o S_{a_2} o ... o S_{a_n}.
SimilarityMap compose_word(const SelfSimilarIFS& ifs, const Word& w);
Rational word_weight(const SelfSimilarIFS& ifs, const Word& w);

struct Stopping {
    std::vector<Word> words;
    Rational target_r;
};

Stopping build_stopping(const SelfSimilarIFS& ifs, const Rational& r);

struct MeasureEnclosure {
    Rational lower;
    Rational upper;
    std::size_t cylinders = 0;
};

class MeasureBudgetExceeded : public BudgetExceeded {
public:
    MeasureBudgetExceeded(const std::string& what, MeasureEnclosure best)
        : BudgetExceeded(what), best_(std::move(best)) {}
    const MeasureEnclosure& best() const { return best_; }

private:
    MeasureEnclosure best_;
};

struct MeasureOptions {
    std::size_t cylinder_budget = 5'000'000;
};

// Rigorous enclosure of mu([a, b]); the measure has no atoms so open and
// closed intervals agree.
MeasureEnclosure measure_interval(const SelfSimilarIFS& ifs, const Interval& interval, const Rational& tol,
                                  const MeasureOptions& options = {});

double frostman_sM(const SelfSimilarIFS& ifs);

}  // namespace slowft
