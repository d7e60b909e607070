#include "slowft/measures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace slowft {

SimilarityMap::SimilarityMap(Rational ratio, Rational translation)
    : ratio_(std::move(ratio)), translation_(std::move(translation)) {
    ratio_.canonicalize();
    translation_.canonicalize();
    if (ratio_ <= 0 || ratio_ >= 1) throw ValidationError("similarity ratio must lie in (0,1), got " + to_string(ratio_));
    if (translation_ < 0) throw ValidationError("translation must be >= 0, got " + to_string(translation_));
    if (ratio_ + translation_ > 1) throw ValidationError("map does not send [0,1] into [0,1]");
}

SimilarityMap SimilarityMap::compose(const SimilarityMap& inner) const {
    return SimilarityMap(ratio_ * inner.ratio_, ratio_ * inner.translation_ + translation_);
}

std::string to_string(const Word& w) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < w.letters.size(); ++i) os << (i ? "," : "") << w.letters[i];
    os << ')';
    return os.str();
}

SelfSimilarIFS::SelfSimilarIFS(std::vector<SimilarityMap> maps, std::vector<Rational> probs)
    : maps_(std::move(maps)), probs_(std::move(probs)) {
    if (maps_.empty()) throw ValidationError("IFS needs at least one map");
    if (maps_.size() != probs_.size()) throw ValidationError("maps and probs differ in length");
    Rational total = 0;
    for (auto& p : probs_) {
        p.canonicalize();
        if (p <= 0) throw ValidationError("probabilities must be strictly positive");
        total += p;
    }
    if (total != 1) throw ValidationError("probabilities sum to " + to_string(total) + ", not 1");
    const Rational fp0 = maps_.front().fixed_point();
    if (std::all_of(maps_.begin(), maps_.end(), [&](const SimilarityMap& m) { return m.fixed_point() == fp0; }))
        throw ValidationError("all maps share one fixed point; the measure is an atom");

    hull_ = {fp0, fp0};
    for (const auto& m : maps_) {
        hull_.lo = std::min(hull_.lo, m.fixed_point());
        hull_.hi = std::max(hull_.hi, m.fixed_point());
    }
    // m = sum p_a (r_a m + d_a)
    Rational pr = 0, pd = 0;
    for (std::size_t a = 0; a < maps_.size(); ++a) {
        pr += probs_[a] * maps_[a].ratio();
        pd += probs_[a] * maps_[a].translation();
    }
    mean_ = pd / (1 - pr);
}

Rational SelfSimilarIFS::min_ratio() const {
    Rational r = maps_.front().ratio();
    for (const auto& m : maps_) r = std::min(r, m.ratio());
    return r;
}

Rational SelfSimilarIFS::max_ratio() const {
    Rational r = maps_.front().ratio();
    for (const auto& m : maps_) r = std::max(r, m.ratio());
    return r;
}

std::optional<long> SelfSimilarIFS::homogeneous_base() const {
    const Rational r = maps_.front().ratio();
    if (r.get_num() != 1 || !r.get_den().fits_slong_p()) return std::nullopt;
    for (const auto& m : maps_)
        if (m.ratio() != r) return std::nullopt;
    return r.get_den().get_si();
}

Interval SelfSimilarIFS::cylinder_hull(const SimilarityMap& composed) const {
    return {composed.apply(hull_.lo), composed.apply(hull_.hi)};
}

SelfSimilarIFS cantor_ifs() {
    return missing_digit_ifs(3, {0, 2});
}

SelfSimilarIFS mu_t_ifs(const Rational& t) {
    if (t < 0 || t > 1) throw ValidationError("t must lie in [0,1]");
    const Rational tenth(1, 10);
    return SelfSimilarIFS({SimilarityMap(tenth, 0), SimilarityMap(tenth, tenth), SimilarityMap(tenth, t / 10)},
                          {Rational(1, 3), Rational(1, 3), Rational(1, 3)});
}

SelfSimilarIFS missing_digit_ifs(long base, const std::vector<long>& digits) {
    if (base < 2) throw ValidationError("base must be >= 2");
    std::vector<SimilarityMap> maps;
    std::vector<Rational> probs;
    for (long d : digits) {
        if (d < 0 || d >= base) throw ValidationError("digit out of range");
        maps.emplace_back(Rational(1, base), Rational(d, base));
        probs.emplace_back(1, static_cast<long>(digits.size()));
    }
    for (auto& p : probs) p.canonicalize();
    return SelfSimilarIFS(std::move(maps), std::move(probs));
}

SelfSimilarIFS ifs_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("maps") || !j.contains("probs"))
        throw ValidationError("IFS config needs 'maps' and 'probs'");
    auto text = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        throw ValidationError("IFS rationals must be strings like \"p/q\"");
    };
    std::vector<SimilarityMap> maps;
    for (const auto& m : j.at("maps")) {
        if (!m.contains("ratio") || !m.contains("translation"))
            throw ValidationError("each map needs 'ratio' and 'translation'");
        maps.emplace_back(parse_rational(text(m.at("ratio"))), parse_rational(text(m.at("translation"))));
    }
    std::vector<Rational> probs;
    for (const auto& p : j.at("probs")) probs.push_back(parse_rational(text(p)));
    return SelfSimilarIFS(std::move(maps), std::move(probs));
}

nlohmann::json ifs_to_json(const SelfSimilarIFS& ifs) {
    nlohmann::json j;
    j["maps"] = nlohmann::json::array();
    for (const auto& m : ifs.maps())
        j["maps"].push_back({{"ratio", to_string(m.ratio())}, {"translation", to_string(m.translation())}});
    j["probs"] = nlohmann::json::array();
    for (const auto& p : ifs.probs()) j["probs"].push_back(to_string(p));
    return j;
}

SimilarityMap compose_word(const SelfSimilarIFS& ifs, const Word& w) {
    if (w.empty()) throw ValidationError("compose_word needs a non-empty word");
    for (auto a : w.letters)
        if (a >= ifs.size()) throw std::out_of_range("letter " + std::to_string(a) + " outside alphabet");
    SimilarityMap acc = ifs.map(w.letters.back());
    for (auto it = std::next(w.letters.rbegin()); it != w.letters.rend(); ++it) acc = ifs.map(*it).compose(acc);
    return acc;
}

Rational word_weight(const SelfSimilarIFS& ifs, const Word& w) {
    Rational p = 1;
    for (auto a : w.letters) {
        if (a >= ifs.size()) throw std::out_of_range("letter " + std::to_string(a) + " outside alphabet");
        p *= ifs.probs()[a];
    }
    return p;
}

Stopping build_stopping(const SelfSimilarIFS& ifs, const Rational& r) {
    if (r >= 1 || r <= 0) throw std::domain_error("stopping radius must lie in (0,1)");
    struct Node {
        Word word;
        Rational diam;
    };
    Stopping out{{}, r};
    std::deque<Node> queue;
    queue.push_back({Word{}, Rational(1)});
    while (!queue.empty()) {
        Node node = std::move(queue.front());
        queue.pop_front();
        if (!node.word.empty() && node.diam <= r) {
            out.words.push_back(std::move(node.word));
            continue;
        }
        for (std::uint32_t a = 0; a < ifs.size(); ++a) {
            Node child{node.word, node.diam * ifs.map(a).ratio()};
            child.word.letters.push_back(a);
            queue.push_back(std::move(child));
        }
    }
    return out;
}

MeasureEnclosure measure_interval(const SelfSimilarIFS& ifs, const Interval& interval, const Rational& tol,
                                  const MeasureOptions& options) {
    if (interval.lo > interval.hi) throw ValidationError("interval endpoints out of order");
    if (interval.lo < 0 || interval.hi > 1) throw ValidationError("interval must lie in [0,1]");
    if (tol <= 0) throw std::domain_error("tolerance must be positive");

    struct Piece {
        SimilarityMap map;
        Rational weight;
    };
    MeasureEnclosure enc{0, 0, 0};
    std::vector<Piece> partial;
    Rational partial_mass = 0;

    auto classify = [&](const SimilarityMap& m, const Rational& w, std::vector<Piece>& next, Rational& next_mass) {
        ++enc.cylinders;
        const Interval h = ifs.cylinder_hull(m);
        const Rational lo = std::max(h.lo, interval.lo), hi = std::min(h.hi, interval.hi);
        // Touching in at most one point carries no mass: mu has no atoms.
        if (hi <= lo) return;
        if (h.lo >= interval.lo && h.hi <= interval.hi) {
            enc.lower += w;
            return;
        }
        next.push_back({m, w});
        next_mass += w;
    };

    // Root: the whole attractor.
    const Interval& root = ifs.hull();
    if (root.lo >= interval.lo && root.hi <= interval.hi) {
        enc.lower = enc.upper = 1;
        return enc;
    }
    for (std::size_t a = 0; a < ifs.size(); ++a) classify(ifs.map(a), ifs.probs()[a], partial, partial_mass);

    while (partial_mass > tol) {
        if (enc.cylinders > options.cylinder_budget) {
            enc.upper = enc.lower + partial_mass;
            throw MeasureBudgetExceeded("measure_interval exceeded its cylinder budget", enc);
        }
        std::vector<Piece> next;
        Rational next_mass = 0;
        for (const auto& piece : partial)
            for (std::size_t a = 0; a < ifs.size(); ++a)
                classify(piece.map.compose(ifs.map(a)), piece.weight * ifs.probs()[a], next, next_mass);
        partial = std::move(next);
        partial_mass = next_mass;
    }
    enc.upper = enc.lower + partial_mass;
    return enc;
}

double frostman_sM(const SelfSimilarIFS& ifs) {
    double best = -1.0;
    for (std::size_t a = 0; a < ifs.size(); ++a) {
        const double lp = std::log(ifs.probs()[a].get_d());
        const double lr = std::log(ifs.map(a).ratio().get_d());
        best = std::max(best, lp / lr);
    }
    return best;
}

}  // namespace slowft
