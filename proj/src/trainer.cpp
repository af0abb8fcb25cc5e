#include "gatslice/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "gatslice/error.hpp"

namespace gatslice {

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::hard: return "hard";
    case Algorithm::dqn: return "dqn";
    case Algorithm::gat_dqn: return "gat-dqn";
    case Algorithm::a2c: return "a2c";
    case Algorithm::gat_a2c: return "gat-a2c";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : {Algorithm::hard, Algorithm::dqn, Algorithm::gat_dqn, Algorithm::a2c, Algorithm::gat_a2c})
        if (algorithm_name(a) == name) return a;
    throw ConfigError("unknown algorithm '" + std::string(name) + "' (hard, dqn, gat-dqn, a2c, gat-a2c)");
}

bool uses_gat(Algorithm a) { return a == Algorithm::gat_dqn || a == Algorithm::gat_a2c; }
bool is_actor_critic(Algorithm a) { return a == Algorithm::a2c || a == Algorithm::gat_a2c; }
bool is_learning(Algorithm a) { return a != Algorithm::hard; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sampling an empty replay buffer");
    std::vector<const Transition*> out(n);
    for (auto& p : out) p = &items_[rng.index(items_.size())];
    return out;
}

double EpsilonSchedule::at(int period) const {
    if (period < warmup) return 0.0;
    const double progress = static_cast<double>(period - warmup) / static_cast<double>(std::max(ramp, 1));
    return end * std::min(progress, 1.0);
}

void TrainerConfig::validate() const {
    learner.net.validate();
    if (periods < 1) throw ConfigError("trainer: periods must be positive");
    if (batch < 1) throw ConfigError("trainer: batch must be positive");
    if (replay_capacity < batch) throw ConfigError("trainer: replay capacity must hold a batch");
    if (target_sync < 1) throw ConfigError("trainer: target_sync must be positive");
    if (!(epsilon_end >= 0.0 && epsilon_end < 1.0)) throw ConfigError("trainer: epsilon_end must be in [0, 1)");
    if (!(ramp_fraction > 0.0 && ramp_fraction <= 1.0)) throw ConfigError("trainer: ramp_fraction must be in (0, 1]");
    if (!(learner.gamma > 0.0 && learner.gamma <= 1.0)) throw ConfigError("trainer: gamma must be in (0, 1]");
    if (!(learner.lr_q > 0.0 && learner.lr_critic > 0.0 && learner.lr_actor > 0.0))
        throw ConfigError("trainer: learning rates must be positive");
    if (!(learner.entropy_weight >= 0.0)) throw ConfigError("trainer: entropy weight must be >= 0");
}

EpsilonSchedule TrainerConfig::schedule() const {
    const int warm = warmup_periods();
    const int ramp = std::max(1, static_cast<int>(std::floor(ramp_fraction * (periods - warm))));
    return {warm, ramp, epsilon_end};
}

Agent::Agent(int id, nn::Field field, Algorithm algorithm, const TrainerConfig& cfg, int num_actions,
             std::uint64_t seed)
    : id_(id), field_(std::move(field)), algorithm_(algorithm), num_actions_(num_actions), batch_(cfg.batch),
      replay_(static_cast<std::size_t>(cfg.replay_capacity)), rng_(derive_seed(seed, {0x6167, static_cast<std::uint64_t>(id)})) {
    const std::string prefix = "agent/" + std::to_string(id) + "/";
    const std::uint64_t init = derive_seed(seed, {0x696e, static_cast<std::uint64_t>(id)});
    nn::LearnerConfig lc = cfg.learner;
    lc.net.use_gat = uses_gat(algorithm);
    if (is_actor_critic(algorithm))
        a2c_ = std::make_unique<nn::A2cLearner>(lc, num_actions, prefix, init);
    else if (is_learning(algorithm))
        dqn_ = std::make_unique<nn::DqnLearner>(lc, num_actions, prefix, init);
}

int Agent::greedy_action(const nn::AgentInput& in) {
    if (dqn_) return dqn_->greedy(field_, in);
    if (a2c_) return a2c_->greedy(field_, in);
    throw std::logic_error("agent has no learner");
}

int Agent::random_action() {
    behavior_ = 1.0 / num_actions_;
    return static_cast<int>(rng_.index(static_cast<std::uint64_t>(num_actions_)));
}

int Agent::act(const nn::AgentInput& in, double epsilon) {
    if (a2c_) {
        const nn::Matrix pi = a2c_->policy(field_, in);
        const int a = rng_.uniform01() < epsilon ? nn::sample_action(pi, rng_) : random_action();
        behavior_ = epsilon * pi(0, a) + (1.0 - epsilon) / num_actions_;
        return a;
    }
    if (rng_.uniform01() < epsilon) return greedy_action(in);
    return random_action();
}

std::optional<nn::UpdateStats> Agent::learn() {
    if (replay_.size() < static_cast<std::size_t>(batch_) || (!dqn_ && !a2c_)) return std::nullopt;
    const auto picks = replay_.sample(static_cast<std::size_t>(batch_), rng_);
    std::vector<const nn::AgentInput*> obs, next;
    nn::Minibatch mb;
    mb.rewards.resize(batch_, 1);
    mb.behavior.resize(batch_, 1);
    for (int b = 0; b < batch_; ++b) {
        const Transition& t = *picks[static_cast<std::size_t>(b)];
        obs.push_back(&t.obs);
        next.push_back(&t.next_obs);
        mb.actions.push_back(t.action);
        mb.rewards(b, 0) = t.reward;
        mb.behavior(b, 0) = t.behavior;
    }
    mb.obs = nn::stack(obs);
    mb.next_obs = nn::stack(next);
    ++updates_;
    return dqn_ ? dqn_->update(field_, mb) : a2c_->update(field_, mb);
}

void Agent::sync_target() {
    if (dqn_) dqn_->sync_target();
}

namespace {

void export_adam(tl::Adam& opt, std::vector<tl::NamedTensor>& out) {
    const auto& ps = opt.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        out.push_back({ps[i]->name + "/adam_m", opt.first_moments()[i]});
        out.push_back({ps[i]->name + "/adam_v", opt.second_moments()[i]});
    }
}

void import_params(std::span<tl::Parameter* const> ps, const std::map<std::string, const tl::Matrix*>& by_name,
                   tl::Adam* opt) {
    auto fetch = [&](const std::string& name, tl::Matrix& dst) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error("checkpoint lacks tensor " + name);
        if (it->second->rows() != dst.rows() || it->second->cols() != dst.cols())
            throw std::runtime_error("checkpoint tensor " + name + " has the wrong shape");
        dst = *it->second;
    };
    for (std::size_t i = 0; i < ps.size(); ++i) {
        fetch(ps[i]->name, ps[i]->value);
        if (opt) {
            fetch(ps[i]->name + "/adam_m", opt->first_moments()[i]);
            fetch(ps[i]->name + "/adam_v", opt->second_moments()[i]);
        }
    }
}

} // namespace

std::vector<tl::NamedTensor> Agent::export_state() {
    std::vector<tl::NamedTensor> out;
    if (dqn_) {
        for (auto* p : dqn_->online().all_parameters()) out.push_back({p->name, p->value});
        for (auto* p : dqn_->target().all_parameters()) out.push_back({p->name, p->value});
        export_adam(dqn_->optimizer(), out);
    } else if (a2c_) {
        for (auto* p : a2c_->actor().all_parameters()) out.push_back({p->name, p->value});
        for (auto* p : a2c_->critic().all_parameters()) out.push_back({p->name, p->value});
        export_adam(a2c_->critic_optimizer(), out);
        export_adam(a2c_->actor_optimizer(), out);
    }
    return out;
}

void Agent::import_state(std::span<const tl::NamedTensor> tensors) {
    std::map<std::string, const tl::Matrix*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t.value;
    if (dqn_) {
        import_params(dqn_->optimizer().params(), by_name, &dqn_->optimizer());
        const auto target = dqn_->target().all_parameters();
        import_params(target, by_name, nullptr);
    } else if (a2c_) {
        import_params(a2c_->critic_optimizer().params(), by_name, &a2c_->critic_optimizer());
        import_params(a2c_->actor_optimizer().params(), by_name, &a2c_->actor_optimizer());
    }
}

Trainer::Trainer(Algorithm algorithm, TrainerConfig cfg, const NeighborGraph& graph, int num_actions,
                 int hard_action, std::uint64_t seed)
    : algorithm_(algorithm), cfg_(std::move(cfg)), num_actions_(num_actions), hard_action_(hard_action), seed_(seed) {
    cfg_.validate();
    schedule_ = cfg_.schedule();
    const int hops = uses_gat(algorithm) ? cfg_.learner.net.gat_layers : 0;
    agents_.reserve(graph.size());
    for (int m = 0; m < static_cast<int>(graph.size()); ++m)
        agents_.emplace_back(m, nn::make_field(graph, m, hops), algorithm, cfg_, num_actions, seed);
}

double Trainer::epsilon(int period) const { return is_learning(algorithm_) ? schedule_.at(period) : 0.0; }

std::vector<int> Trainer::act(int period, std::span<const Observation> obs) {
    std::vector<int> actions(agents_.size(), hard_action_);
    if (!is_learning(algorithm_)) return actions;
    const bool warm = period < warmup_periods();
    const double eps = epsilon(period);
    for (std::size_t m = 0; m < agents_.size(); ++m) {
        Agent& a = agents_[m];
        actions[m] = warm ? a.random_action() : a.act(nn::gather_input(a.field(), obs), eps);
    }
    return actions;
}

void Trainer::observe(int period, std::span<const Observation> obs, std::span<const int> actions,
                      std::span<const double> rewards, std::span<const Observation> next_obs) {
    if (!is_learning(algorithm_)) return;
    const bool train = period >= warmup_periods();
    double loss = 0.0;
    for (std::size_t m = 0; m < agents_.size(); ++m) {
        Agent& a = agents_[m];
        a.replay().push({nn::gather_input(a.field(), obs), actions[m], rewards[m], nn::gather_input(a.field(), next_obs),
                         a.behavior()});
        if (!train) continue;
        if (auto stats = a.learn()) {
            loss += stats->loss;
            if (a.updates() % cfg_.target_sync == 0) a.sync_target();
        } else {
            ++skipped_;
        }
    }
    if (train) last_loss_ = loss / static_cast<double>(agents_.size());
}

void Trainer::save_checkpoint(const std::filesystem::path& dir, int period) {
    std::vector<tl::NamedTensor> tensors;
    nlohmann::json updates = nlohmann::json::array();
    for (Agent& a : agents_) {
        auto part = a.export_state();
        std::move(part.begin(), part.end(), std::back_inserter(tensors));
        updates.push_back(a.updates());
    }
    nlohmann::json meta = {{"algorithm", algorithm_name(algorithm_)},
                           {"seed", seed_},
                           {"period", period},
                           {"agents", agents_.size()},
                           {"updates", updates}};
    tl::save_checkpoint(dir, tensors, meta.dump());
}

int Trainer::load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    if (!ms) throw std::runtime_error("checkpoint: no manifest in " + dir.string());
    const auto manifest = nlohmann::json::parse(ms);
    const auto& meta = manifest.at("meta");
    if (meta.at("algorithm").get<std::string>() != algorithm_name(algorithm_))
        throw ConfigError("checkpoint was written by algorithm " + meta.at("algorithm").get<std::string>());
    if (meta.at("agents").get<std::size_t>() != agents_.size()) throw ConfigError("checkpoint agent count differs");
    const auto tensors = tl::load_checkpoint(dir);
    for (Agent& a : agents_) a.import_state(tensors);
    const auto period = meta.at("period").get<int>();
    const auto& updates = meta.at("updates");
    for (std::size_t m = 0; m < agents_.size(); ++m) {
        const long u = updates.at(m).get<long>();
        agents_[m].set_updates(u);
        if (auto* d = agents_[m].dqn()) d->optimizer().set_steps(u);
        if (auto* c = agents_[m].a2c()) {
            c->critic_optimizer().set_steps(u);
            c->actor_optimizer().set_steps(u);
        }
    }
    return period;
}

std::string metrics_header(std::span<const SliceProfile> slices) {
    std::string h = "period,bs_id,algorithm,seed,action_index";
    for (std::size_t n = 0; n < slices.size(); ++n) h += ",c" + std::to_string(n + 1) + "_units";
    h += ",se";
    for (const auto& s : slices) h += ",ssr_" + s.name;
    h += ",mean_ssr,utility,reward,epsilon,handovers";
    return h;
}

std::vector<double> rolling_median(std::span<const double> xs, std::size_t window) {
    std::vector<double> out;
    if (window == 0 || xs.size() < window) return out;
    std::vector<double> buf(window);
    for (std::size_t end = window; end <= xs.size(); ++end) {
        std::copy(xs.begin() + static_cast<std::ptrdiff_t>(end - window), xs.begin() + static_cast<std::ptrdiff_t>(end), buf.begin());
        const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(window / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        double med = *mid;
        if (window % 2 == 0) med = 0.5 * (med + *std::max_element(buf.begin(), mid));
        out.push_back(med);
    }
    return out;
}

double tail_mean(std::span<const PeriodSummary> periods, std::size_t n, double PeriodSummary::*field) {
    n = std::min(n, periods.size());
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = periods.size() - n; i < periods.size(); ++i) s += periods[i].*field;
    return s / static_cast<double>(n);
}

double tail_mean_ssr(std::span<const PeriodSummary> periods, std::size_t n, std::size_t slice) {
    n = std::min(n, periods.size());
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = periods.size() - n; i < periods.size(); ++i) s += periods[i].ssr.at(slice);
    return s / static_cast<double>(n);
}

namespace {

void append_number(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    line += buf;
}

void write_summary(const std::filesystem::path& path, std::string_view algorithm, std::uint64_t seed,
                   std::span<const PeriodSummary> periods, std::span<const SliceProfile> slices) {
    constexpr std::size_t kWindow = 50;
    std::vector<std::vector<double>> series;
    auto column = [&](auto get) {
        std::vector<double> xs;
        for (const auto& p : periods) xs.push_back(get(p));
        series.push_back(rolling_median(xs, kWindow));
    };
    column([](const PeriodSummary& p) { return p.utility; });
    column([](const PeriodSummary& p) { return p.reward; });
    column([](const PeriodSummary& p) { return p.se; });
    for (std::size_t n = 0; n < slices.size(); ++n) column([n](const PeriodSummary& p) { return p.ssr[n]; });
    column([](const PeriodSummary& p) { return p.mean_ssr; });

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "period,algorithm,seed,window,utility_median,reward_median,se_median";
    for (const auto& s : slices) os << ",ssr_" << s.name << "_median";
    os << ",mean_ssr_median\n";
    for (std::size_t i = 0; i < series[0].size(); ++i) {
        std::string line = std::to_string(periods[i + kWindow - 1].period) + "," + std::string(algorithm) + "," +
                           std::to_string(seed) + "," + std::to_string(kWindow);
        for (const auto& s : series) append_number(line, s[i]);
        os << line << '\n';
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    SlicingEnv env(cfg.env);
    Trainer trainer(cfg.algorithm, cfg.trainer, env.graph(), env.codec().size(), env.hard_action(), cfg.seed);
    const auto& slices = cfg.env.slices;
    const std::string alg(algorithm_name(cfg.algorithm));

    int start = 0;
    std::uint64_t env_seed = cfg.seed;
    if (cfg.resume_from) {
        start = trainer.load_checkpoint(*cfg.resume_from) + 1;
        env_seed = derive_seed(cfg.seed, {0x7273, static_cast<std::uint64_t>(start)});
    }
    auto obs = env.reset(env_seed);

    std::ofstream metrics;
    const bool write = !cfg.out_dir.empty();
    if (write) {
        std::filesystem::create_directories(cfg.out_dir);
        // A resumed run keeps the rows written before its checkpoint.
        std::vector<std::string> kept;
        const auto path = cfg.out_dir / "metrics.csv";
        if (cfg.resume_from && std::filesystem::exists(path)) {
            std::ifstream old(path);
            std::string line;
            std::getline(old, line);
            while (std::getline(old, line))
                if (!line.empty() && std::stoi(line.substr(0, line.find(','))) < start) kept.push_back(line);
        }
        metrics.open(path, std::ios::trunc);
        if (!metrics) throw std::runtime_error("cannot write metrics.csv in " + cfg.out_dir.string());
        metrics << metrics_header(slices) << '\n';
        for (const auto& line : kept) metrics << line << '\n';
    }

    ExperimentResult result;
    const std::string seed_text = std::to_string(cfg.seed);
    for (int t = start; t < cfg.trainer.periods; ++t) {
        const auto actions = trainer.act(t, obs);
        StepResult step = env.step(actions);
        trainer.observe(t, obs, actions, step.rewards, step.observations);
        const double eps = trainer.epsilon(t);

        PeriodSummary sum;
        sum.period = t;
        sum.epsilon = eps;
        sum.ssr.assign(slices.size(), 0.0);
        for (const BsReport& r : step.reports) {
            sum.utility += r.utility;
            sum.reward += r.reward;
            sum.se += r.metrics.se;
            sum.mean_ssr += r.metrics.mean_ssr;
            for (std::size_t n = 0; n < slices.size(); ++n) sum.ssr[n] += r.metrics.ssr[n];
            if (write) {
                std::string line = std::to_string(t) + "," + std::to_string(r.bs) + "," + alg + "," + seed_text + "," +
                                   std::to_string(r.action);
                for (int u : r.units) line += "," + std::to_string(u);
                append_number(line, r.metrics.se);
                for (double s : r.metrics.ssr) append_number(line, s);
                append_number(line, r.metrics.mean_ssr);
                append_number(line, r.utility);
                append_number(line, r.reward);
                append_number(line, eps);
                line += "," + std::to_string(r.handovers);
                metrics << line << '\n';
            }
        }
        const double nb = static_cast<double>(step.reports.size());
        sum.utility /= nb;
        sum.reward /= nb;
        sum.se /= nb;
        sum.mean_ssr /= nb;
        for (double& s : sum.ssr) s /= nb;
        result.periods.push_back(sum);

        if (cfg.log && cfg.log_every > 0 && (t + 1) % cfg.log_every == 0) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "[%s seed %llu] period %d utility %.4f reward %.4f epsilon %.3f loss %.5f\n",
                          alg.c_str(), static_cast<unsigned long long>(cfg.seed), t + 1,
                          tail_mean(result.periods, static_cast<std::size_t>(cfg.log_every), &PeriodSummary::utility),
                          tail_mean(result.periods, static_cast<std::size_t>(cfg.log_every), &PeriodSummary::reward),
                          eps, trainer.last_loss());
            *cfg.log << buf << std::flush;
        }
        if (write && is_learning(cfg.algorithm) && cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0)
            trainer.save_checkpoint(cfg.out_dir / "checkpoints" / ("period_" + std::to_string(t + 1)), t);
        obs = std::move(step.observations);
    }
    if (write) {
        if (is_learning(cfg.algorithm)) trainer.save_checkpoint(cfg.out_dir / "checkpoints" / "final", cfg.trainer.periods - 1);
        write_summary(cfg.out_dir / "summary.csv", alg, cfg.seed, result.periods, slices);
    }
    result.reward_clips = env.clip_count();
    result.skipped_updates = trainer.skipped_updates();
    return result;
}

// Toy MDP. Demands are chosen so that no two states' encodings coincide.
namespace {

constexpr double kToyDemand[ToyMdp::kStates][2] = {{1.0, 0.1}, {0.1, 1.0}, {0.6, 0.6}, {0.1, 0.1}};
constexpr double kToyReward[ToyMdp::kStates][ToyMdp::kActions] = {
    {0.1, 0.4, 0.6}, {0.6, 0.1, 0.3}, {0.3, 0.8, 0.3}, {0.2, 0.0, 0.1}};
constexpr int kToyNext[ToyMdp::kStates][ToyMdp::kActions] = {{1, 2, 3}, {3, 0, 2}, {0, 2, 1}, {3, 0, 2}};

} // namespace

ToyMdp::ToyMdp() : graph_(std::vector<std::vector<int>>{{0}}) {}

std::vector<double> ToyMdp::demand(int state) { return {kToyDemand[state][0], kToyDemand[state][1]}; }
double ToyMdp::reward(int state, int action) { return kToyReward[state][action]; }
int ToyMdp::next_state(int state, int action) { return kToyNext[state][action]; }

std::vector<Observation> ToyMdp::reset(std::uint64_t seed) {
    Rng rng(seed);
    state_ = static_cast<int>(rng.index(kStates));
    prev_state_ = -1;
    return {{{0.0, 0.0}, demand(state_)}};
}

StepResult ToyMdp::step(std::span<const int> actions) {
    if (actions.size() != 1 || actions[0] < 0 || actions[0] >= kActions) throw std::invalid_argument("toy: bad action");
    StepResult out;
    out.rewards = {reward(state_, actions[0])};
    prev_state_ = state_;
    state_ = next_state(state_, actions[0]);
    out.observations = {{demand(prev_state_), demand(state_)}};
    return out;
}

ToyMdp::Solution ToyMdp::solve(double gamma, double tol) {
    Solution s;
    s.value.assign(kStates, 0.0);
    s.q.assign(kStates, std::vector<double>(kActions, 0.0));
    for (int it = 0; it < 100000; ++it) {
        double delta = 0.0;
        std::vector<double> next(kStates);
        for (int x = 0; x < kStates; ++x) {
            double best = -1e300;
            for (int a = 0; a < kActions; ++a) best = std::max(best, reward(x, a) + gamma * s.value[next_state(x, a)]);
            next[x] = best;
            delta = std::max(delta, std::abs(best - s.value[x]));
        }
        s.value = next;
        if (delta < tol) break;
    }
    s.policy.assign(kStates, 0);
    s.residual = 0.0;
    for (int x = 0; x < kStates; ++x) {
        for (int a = 0; a < kActions; ++a) s.q[x][a] = reward(x, a) + gamma * s.value[next_state(x, a)];
        s.policy[x] = nn::greedy_action(s.q[x]);
        s.residual = std::max(s.residual, std::abs(s.q[x][s.policy[x]] - s.value[x]));
    }
    return s;
}

std::vector<int> ToyMdp::myopic_policy() {
    std::vector<int> p(kStates);
    for (int x = 0; x < kStates; ++x) p[x] = nn::greedy_action(std::span<const double>(kToyReward[x], kActions));
    return p;
}

ToyResult train_toy(Algorithm algorithm, TrainerConfig cfg, std::uint64_t seed) {
    if (uses_gat(algorithm) || !is_learning(algorithm)) throw std::invalid_argument("toy needs dqn or a2c");
    cfg.learner.net.demand_dim = 2;
    ToyMdp env;
    Trainer trainer(algorithm, cfg, env.graph(), ToyMdp::kActions, 1, seed);
    auto obs = env.reset(seed);
    for (int t = 0; t < cfg.periods; ++t) {
        const auto actions = trainer.act(t, obs);
        StepResult step = env.step(actions);
        trainer.observe(t, obs, actions, step.rewards, step.observations);
        obs = std::move(step.observations);
    }
    // Greedy action in every state, from every predecessor it can be reached from.
    Agent& agent = trainer.agents()[0];
    ToyResult res;
    res.updates = agent.updates();
    res.policy.assign(ToyMdp::kStates, -2);
    for (int prev = 0; prev < ToyMdp::kStates; ++prev) {
        for (int a = 0; a < ToyMdp::kActions; ++a) {
            const int x = ToyMdp::next_state(prev, a);
            const std::vector<Observation> o{{ToyMdp::demand(prev), ToyMdp::demand(x)}};
            const int g = agent.greedy_action(nn::gather_input(agent.field(), o));
            int& slot = res.policy[x];
            slot = (slot == -2 || slot == g) ? g : -1;
        }
    }
    for (int& p : res.policy)
        if (p == -2) p = -1;
    return res;
}

} // namespace gatslice
