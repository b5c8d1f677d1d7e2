#include "chainstab/setchain.hpp"

#include <algorithm>
#include <cmath>

#include "chainstab/errors.hpp"

namespace chainstab {

Decomposition decompose(const std::vector<Region>& omegas) {
    if (omegas.empty()) throw EmptyChain("a chain needs at least one region");
    Decomposition out;
    out.cells.push_back(omegas.front());
    out.unions.push_back(omegas.front());
    for (std::size_t i = 1; i < omegas.size(); ++i) {
        out.cells.push_back(Region::difference(omegas[i], out.unions.back()));
        out.unions.push_back(out.unions.back() | omegas[i]);
    }
    return out;
}

std::shared_ptr<const SetChain> SetChain::finite(std::vector<Region> omegas, std::vector<Vec> controls) {
    if (omegas.empty()) throw EmptyChain("a chain needs at least one region");
    if (controls.size() + 1 != omegas.size())
        throw InvalidArgument("need one control per region after the first (" + std::to_string(omegas.size() - 1) +
                              "), got " + std::to_string(controls.size()));
    auto chain = std::shared_ptr<SetChain>(new SetChain());
    chain->mode_ = Mode::finite_covers_all;
    chain->head_ = omegas.front();
    chain->links_.push_back(Link{omegas.front(), {}});
    for (std::size_t i = 1; i < omegas.size(); ++i) chain->links_.push_back(Link{omegas[i], controls[i - 1]});
    return chain;
}

std::shared_ptr<const SetChain> SetChain::generated(Region head, ChainGenerator gen) {
    if (!gen.region || !gen.control) throw InvalidArgument("chain generator needs region and control callables");
    auto chain = std::shared_ptr<SetChain>(new SetChain());
    chain->mode_ = Mode::locally_finite;
    chain->head_ = std::move(head);
    chain->gen_ = std::move(gen);
    return chain;
}

std::size_t SetChain::size() const {
    if (mode_ == Mode::finite_covers_all) return links_.size();
    std::lock_guard lock(mutex_);
    return extent_;
}

const SetChain::Link& SetChain::link(std::size_t i) const {
    if (i == 0) throw InvalidArgument("chain indices are 1-based");
    if (mode_ == Mode::finite_covers_all) {
        if (i > links_.size()) throw InvalidArgument("chain index " + std::to_string(i) + " out of range");
        return links_[i - 1];
    }
    if (i > gen_.max_index) throw NotCovered("chain index " + std::to_string(i) + " beyond generator limit");
    std::lock_guard lock(mutex_);
    auto it = cache_.find(i);
    if (it == cache_.end()) {
        Link l = i == 1 ? Link{head_, {}} : Link{gen_.region(i), gen_.control(i)};
        it = cache_.emplace(i, std::move(l)).first;
    }
    extent_ = std::max(extent_, i);
    return it->second;
}

Region SetChain::omega(std::size_t i) const { return link(i).region; }

Vec SetChain::control(std::size_t i) const {
    if (i == 1) throw InvalidArgument("the head region uses the inner feedback, not a constant control");
    return link(i).control;
}

Region SetChain::union_upto(std::size_t i) const {
    std::vector<Region> parts;
    for (std::size_t k = 1; k <= i; ++k) parts.push_back(omega(k));
    return Region::union_of(std::move(parts));
}

Region SetChain::cell(std::size_t i) const {
    if (i == 1) return omega(1);
    return Region::difference(omega(i), union_upto(i - 1));
}

std::size_t SetChain::classify(ConstSpan x) const {
    if (mode_ == Mode::finite_covers_all) {
        for (std::size_t i = 0; i < links_.size(); ++i)
            if (links_[i].region.contains(x)) return i + 1;
        throw NotCovered("state not covered by any chain region");
    }
    if (head_.contains(x)) return 1;
    if (gen_.locate) {
        if (auto hint = gen_.locate(x); hint && *hint >= 2 && omega(*hint).contains(x)) {
            // the hint must be the first covering index
            bool earlier = false;
            if (*hint <= 64) {
                for (std::size_t k = 2; k < *hint && !earlier; ++k) earlier = omega(k).contains(x);
            }
            if (!earlier) return *hint;
        }
    }
    for (std::size_t i = 2; i <= gen_.max_index; ++i)
        if (omega(i).contains(x)) return i;
    throw NotCovered("state not covered within the generator limit");
}

std::shared_ptr<const SetChain> SetChain::with_control(std::size_t i, Vec v) const {
    if (mode_ != Mode::finite_covers_all) throw InvalidArgument("control overrides need a finite chain");
    if (i < 2 || i > links_.size()) throw InvalidArgument("control override index " + std::to_string(i) + " out of range");
    std::vector<Region> omegas;
    std::vector<Vec> controls;
    for (const auto& l : links_) omegas.push_back(l.region);
    for (std::size_t k = 1; k < links_.size(); ++k) controls.push_back(links_[k].control);
    controls[i - 2] = std::move(v);
    return finite(std::move(omegas), std::move(controls));
}

// ---------------------------------------------------------------------------

PiecewiseFeedback::PiecewiseFeedback(InnerFeedback inner, std::shared_ptr<const SetChain> chain,
                                     ControlSet controls, double h_tilde, double dwell)
    : inner_(std::move(inner)),
      chain_(std::move(chain)),
      controls_(std::move(controls)),
      h_tilde_(h_tilde),
      dwell_(dwell),
      period_(std::min(h_tilde, dwell)) {
    if (!inner_) throw InvalidArgument("inner feedback must be callable");
    if (!chain_) throw EmptyChain("feedback needs a chain");
    if (!(h_tilde_ > 0.0) || !(dwell_ > 0.0)) throw InvalidArgument("h~ and r must be positive");
}

double PiecewiseFeedback::certified_period() const { return std::min(h_tilde_, dwell_); }

PiecewiseFeedback::Value PiecewiseFeedback::evaluate(ConstSpan x) const {
    const std::size_t cell = chain_->classify(x);
    Value out{Vec(controls_.dim(), 0.0), cell};
    if (cell == 1)
        inner_(x, out.u);
    else
        out.u = chain_->control(cell);
    if (!controls_.contains(out.u))
        throw ControlOutOfSet("feedback value on cell " + std::to_string(cell) + " outside U = " + controls_.describe());
    return out;
}

PiecewiseFeedback PiecewiseFeedback::with_period(double h) const {
    if (!(h > 0.0)) throw InvalidArgument("sampling period must be positive");
    PiecewiseFeedback fb = *this;
    fb.period_ = h;
    return fb;
}

PiecewiseFeedback PiecewiseFeedback::with_chain(std::shared_ptr<const SetChain> chain) const {
    if (!chain) throw EmptyChain("feedback needs a chain");
    PiecewiseFeedback fb = *this;
    fb.chain_ = std::move(chain);
    return fb;
}

PiecewiseFeedback synthesize(InnerFeedback inner, const Region& theta, double h_tilde, std::vector<Region> omegas,
                             std::vector<Vec> controls, double dwell, const ControlSet& controls_set) {
    if (omegas.empty()) throw EmptyChain("a chain needs at least one region");
    if (!omegas.front().same_predicate(theta)) throw ChainHeadMismatch("Omega_1 must be Theta");
    for (std::size_t i = 0; i < controls.size(); ++i) {
        if (controls[i].size() != controls_set.dim())
            throw DimensionMismatch("control v_" + std::to_string(i + 2) + " has the wrong dimension");
        if (!controls_set.contains(controls[i]))
            throw ControlOutOfSet("v_" + std::to_string(i + 2) + " outside U = " + controls_set.describe());
    }
    auto chain = SetChain::finite(std::move(omegas), std::move(controls));
    return PiecewiseFeedback(std::move(inner), std::move(chain), controls_set, h_tilde, dwell);
}

PiecewiseFeedback synthesize(InnerFeedback inner, const Region& theta, double h_tilde, ChainGenerator gen,
                             double dwell, const ControlSet& controls_set) {
    auto chain = SetChain::generated(theta, std::move(gen));
    return PiecewiseFeedback(std::move(inner), std::move(chain), controls_set, h_tilde, dwell);
}

}  // namespace chainstab
