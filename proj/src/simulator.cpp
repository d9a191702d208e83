#include "hetplan/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <queue>
#include <random>
#include <sstream>
#include <thread>

namespace hetplan {
namespace {
//---------------------------------------------------------------------------
struct ChildEdge {
   bool sink = false;
   std::vector<int> targets;  // global worker indices
   std::vector<double> weights;
   double bytes = 0;
};
//---------------------------------------------------------------------------
struct WorkerInfo {
   std::string id;
   std::string node;
   int tier = 1;
   double capacity = 0;  // at the simulated percentile
   double price = 0;
   double ratio = 1;
   std::vector<ChildEdge> children;
};
//---------------------------------------------------------------------------
struct SourceInfo {
   std::string id;
   double rate = 0;
   std::vector<ChildEdge> children;
};
//---------------------------------------------------------------------------
/// Static wiring shared by both execution modes.
struct Topology {
   std::vector<WorkerInfo> workers;
   std::vector<SourceInfo> sources;
   std::vector<std::string> nodes;  // worker-bearing, canonical order
   std::map<std::string, double> target_rate;
   std::string sink;
   std::vector<std::vector<double>> price_per_byte;  // [from tier][to tier]
};
//---------------------------------------------------------------------------
Topology build_topology(const Instance& instance, const PhysicalPlan& plan, const SimConfig& cfg) {
   const auto& wf = instance.workflow;
   const auto& infra = instance.infrastructure;
   const bool relaxed = !plan.a2_violations.empty();

   CostOptions opts;
   opts.enforce_a2 = !relaxed;
   opts.percentile = instance.objectives.percentile;
   auto model = make_cost_model(instance, plan.selection, opts);
   std::vector<std::string> problems;
   for (const auto& p : check_plan(model, plan.assignment))
      if (p.rfind("uplink", 0) != 0) problems.push_back(p);
   if (!problems.empty()) throw InputError("plan cannot be simulated: " + problems.front());

   Topology topo;
   topo.sink = *wf.sink();
   std::map<std::string, int> index;
   for (const auto& id : canonical_order(wf)) {
      if (!wf.node(id).bears_workers()) continue;
      topo.nodes.push_back(id);
      for (const auto& w : plan.assignment.at(id)) {
         index[w] = static_cast<int>(topo.workers.size());
         WorkerInfo info;
         info.id = w;
         info.node = id;
         info.tier = infra.worker(w).tier;
         info.capacity = instance.profiles.throughput.get(throughput_key(id, model.variant(id)), infra.worker(w).type,
                                                          cfg.latency_percentile) *
                         throughput_coefficient(w, infra);
         if (!(info.capacity > 0)) throw InputError("worker " + w + " has no profiled rate at " + to_string(cfg.latency_percentile));
         info.price = infra.hourly_price(w);
         info.ratio = wf.output_ratio(id, model.variant(id));
         topo.workers.push_back(std::move(info));
      }
   }
   auto edges_of = [&](const std::string& u) {
      std::vector<ChildEdge> out;
      for (const auto& c : wf.children(u)) {
         ChildEdge e;
         e.bytes = wf.unit_size(u, c);
         if (c == topo.sink) {
            e.sink = true;
         } else {
            for (const auto& y : plan.assignment.at(c)) {
               e.targets.push_back(index.at(y));
               e.weights.push_back(model.capacity(c, y));
            }
         }
         out.push_back(std::move(e));
      }
      return out;
   };
   for (auto& w : topo.workers) w.children = edges_of(w.node);
   for (const auto& s : wf.sources()) topo.sources.push_back({s, model.rate(s) * cfg.load_factor, edges_of(s)});
   for (const auto& [id, r] : model.rates()) topo.target_rate[id] = r * cfg.load_factor;

   const int tiers = infra.tier_count();
   topo.price_per_byte.assign(tiers + 1, std::vector<double>(tiers + 1, 0.0));
   for (int i = 1; i <= tiers; ++i)
      for (int j = 1; j <= tiers; ++j) {
         auto p = relaxed ? infra.relaxed_price(i, j) : infra.price(i, j);
         topo.price_per_byte[i][j] = p.forbidden ? 0.0 : p.per_byte();
      }
   return topo;
}
//---------------------------------------------------------------------------
/// Smooth weighted round-robin: over any window the picks track the weights.
class Dispatcher {
public:
   explicit Dispatcher(const ChildEdge& e) : edge_(&e), current_(e.weights.size(), 0.0) {
      for (double w : e.weights) total_ += w;
   }
   bool sink() const { return edge_->sink; }
   double bytes() const { return edge_->bytes; }
   int next() {
      std::size_t best = 0;
      for (std::size_t i = 0; i < current_.size(); ++i) {
         current_[i] += edge_->weights[i];
         if (current_[i] > current_[best]) best = i;
      }
      current_[best] -= total_;
      return edge_->targets[best];
   }

private:
   const ChildEdge* edge_;
   std::vector<double> current_;
   double total_ = 0;
};
//---------------------------------------------------------------------------
struct Message {
   int to = -1;  // -1 = sink
   double bytes = 0;
   int from_tier = 1;
   int sender = 0;
   std::uint64_t seq = 0;
   double relay_time = 0;
};
//---------------------------------------------------------------------------
double service_sample(double mean, double cv, std::mt19937_64& rng) {
   if (cv <= 0) return mean;
   const double shape = 1.0 / (cv * cv);
   std::gamma_distribution<double> g(shape, mean / shape);
   return g(rng);
}
//---------------------------------------------------------------------------
double relay_time(const RelayCostModel& m, double bytes, double mean_service) {
   return m.per_message_s + m.per_byte_s * bytes + m.relative * mean_service;
}
//---------------------------------------------------------------------------
/// Fixed and size-dependent relay shares, without the payload term folded in.
std::pair<double, double> relay_split(const RelayCostModel& m, double bytes, double mean_service) {
   return {m.per_message_s + m.relative * mean_service, m.per_byte_s * bytes};
}
//---------------------------------------------------------------------------
class Sequencer {
public:
   std::uint64_t next(int sender, int receiver) { return ++sent_[{sender, receiver}]; }
   /// False when `seq` arrives out of order for the pair.
   bool accept(int sender, int receiver, std::uint64_t seq) {
      auto& last = seen_[{sender, receiver}];
      bool ok = seq > last;
      last = std::max(last, seq);
      return ok;
   }

private:
   std::map<std::pair<int, int>, std::uint64_t> sent_, seen_;
};
//---------------------------------------------------------------------------
//---------------------------------------------------------------------------
class VirtualSim {
public:
   VirtualSim(const Topology& topo, const SimConfig& cfg) : topo_(topo), cfg_(cfg), rng_(cfg.seed) {
      warmup_ = cfg.duration * cfg.warmup_fraction;
      const int sources = static_cast<int>(topo.sources.size());
      for (std::size_t i = 0; i < topo.workers.size(); ++i) {
         Worker w;
         w.sender_id = sources + static_cast<int>(i);
         for (const auto& e : topo.workers[i].children) w.dispatch.emplace_back(e);
         workers_.push_back(std::move(w));
      }
      for (const auto& s : topo.sources) {
         Source src;
         for (const auto& e : s.children) src.dispatch.emplace_back(e);
         src.period = 1.0 / s.rate;
         sources_.push_back(std::move(src));
      }
   }

   SimReport run() {
      for (std::size_t s = 0; s < sources_.size(); ++s)
         if (topo_.sources[s].rate > 0) schedule(0.0, Kind::SourceEmit, static_cast<int>(s));
      if (cfg_.sample_interval > 0) schedule(cfg_.sample_interval, Kind::Sample, 0);
      while (!events_.empty()) {
         auto ev = events_.top();
         if (ev.time > cfg_.duration && !cfg_.drain) break;
         events_.pop();
         now_ = ev.time;
         switch (ev.kind) {
            case Kind::SourceEmit: source_emit(ev.index); break;
            case Kind::ServiceDone: service_done(ev.index); break;
            case Kind::RelayDone: relay_done(ev.index); break;
            case Kind::Sample: sample(); break;
         }
      }
      return report();
   }

private:
   enum class Kind { SourceEmit, ServiceDone, RelayDone, Sample };
   struct Event {
      double time;
      std::uint64_t seq;
      Kind kind;
      int index;
      bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
   };
   struct Waiter {
      bool source;
      int index;
   };
   struct Item {
      int sender;
      std::uint64_t seq;
   };
   struct Worker {
      int sender_id = 0;
      std::vector<Dispatcher> dispatch;
      std::deque<Item> input;
      std::deque<Waiter> waiters;
      bool busy = false;
      double service_start = 0, service_time = 0;
      double accumulator = 0;
      std::deque<Message> held;
      std::deque<Message> out;
      bool relay_busy = false, relay_blocked = false;
      double busy_window = 0;
      std::uint64_t processed_window = 0, processed_total = 0, processed_sample = 0;
      std::size_t high_watermark = 0;
      std::vector<double> overhead_exec, overhead_network;
   };
   struct Source {
      std::vector<Dispatcher> dispatch;
      double period = 0;
      double next_scheduled = 0;
      std::deque<Message> pending;
   };

   bool measuring() const { return now_ >= warmup_ && now_ <= cfg_.duration; }

   void schedule(double t, Kind k, int index) { events_.push({t, ++event_seq_, k, index}); }

   Message make_message(Dispatcher& d, int sender, int from_tier, double mean_service) {
      Message m;
      m.to = d.sink() ? -1 : d.next();
      m.bytes = d.bytes();
      m.from_tier = from_tier;
      m.sender = sender;
      m.seq = m.to < 0 ? 0 : sequencer_.next(sender, m.to);
      m.relay_time = relay_time(cfg_.relay, m.bytes, mean_service);
      return m;
   }

   bool deliver(const Message& m, Waiter self) {
      if (m.to < 0) {
         ++sink_total_;
         if (measuring()) ++sink_window_;
         return true;
      }
      auto& y = workers_[m.to];
      if (y.input.size() >= cfg_.queue_capacity) {
         y.waiters.push_back(self);
         return false;
      }
      y.input.push_back({m.sender, m.seq});
      y.high_watermark = std::max(y.high_watermark, y.input.size());
      if (measuring()) {
         const int to_tier = topo_.workers[m.to].tier;
         network_cost_ += topo_.price_per_byte[m.from_tier][to_tier] * m.bytes;
         network_bytes_ += m.bytes;
      }
      if (!y.busy && y.held.empty()) start_service(m.to);
      return true;
   }

   void wake(int w) {
      auto& y = workers_[w];
      if (y.waiters.empty()) return;
      auto waiter = y.waiters.front();
      y.waiters.pop_front();
      if (waiter.source) source_flush(waiter.index);
      else relay_flush(waiter.index);
   }

   void source_emit(int s) {
      if (now_ >= cfg_.duration) return;
      auto& src = sources_[s];
      ++emitted_total_;
      for (auto& d : src.dispatch) src.pending.push_back(make_message(d, s, 1, 0.0));
      source_flush(s);
   }

   void source_flush(int s) {
      auto& src = sources_[s];
      while (!src.pending.empty()) {
         if (!deliver(src.pending.front(), {true, s})) return;
         src.pending.pop_front();
      }
      src.next_scheduled += src.period;
      schedule(std::max(src.next_scheduled, now_), Kind::SourceEmit, s);
   }

   void start_service(int w) {
      auto& y = workers_[w];
      const auto item = y.input.front();
      y.input.pop_front();
      if (!sequencer_.accept(item.sender, w, item.seq)) ++fifo_violations_;
      y.busy = true;
      y.service_start = now_;
      y.service_time = service_sample(1.0 / topo_.workers[w].capacity, cfg_.latency_jitter, rng_);
      schedule(now_ + y.service_time, Kind::ServiceDone, w);
      wake(w);
   }

   void service_done(int w) {
      auto& y = workers_[w];
      const auto& info = topo_.workers[w];
      y.busy = false;
      ++y.processed_total;
      ++y.processed_sample;
      const double lo = std::max(y.service_start, warmup_), hi = std::min(now_, cfg_.duration);
      if (hi > lo) y.busy_window += hi - lo;
      const bool counted = measuring();
      if (counted) ++y.processed_window;

      y.accumulator += info.ratio;
      const auto outputs = static_cast<long>(std::floor(y.accumulator + 1e-9));
      y.accumulator -= static_cast<double>(outputs);
      const double mean = 1.0 / info.capacity;
      double exec = 0, network = 0;
      for (long k = 0; k < outputs; ++k)
         for (auto& d : y.dispatch) {
            y.held.push_back(make_message(d, y.sender_id, info.tier, mean));
            auto [fixed, sized] = relay_split(cfg_.relay, d.bytes(), mean);
            exec += fixed;
            network += sized;
         }
      if (counted && y.service_time > 0) {
         y.overhead_exec.push_back(exec / y.service_time);
         y.overhead_network.push_back(network / y.service_time);
      }
      worker_flush(w);
   }

   void worker_flush(int w) {
      auto& y = workers_[w];
      while (!y.held.empty() && y.out.size() < cfg_.queue_capacity) {
         y.out.push_back(y.held.front());
         y.held.pop_front();
         if (!y.relay_busy && !y.relay_blocked) start_relay(w);
      }
      if (y.held.empty() && !y.busy && !y.input.empty()) start_service(w);
   }

   void start_relay(int w) {
      auto& y = workers_[w];
      y.relay_busy = true;
      schedule(now_ + y.out.front().relay_time, Kind::RelayDone, w);
   }

   void relay_done(int w) {
      workers_[w].relay_busy = false;
      relay_flush(w);
   }

   void relay_flush(int w) {
      auto& y = workers_[w];
      if (!deliver(y.out.front(), {false, w})) {
         y.relay_blocked = true;
         return;
      }
      y.out.pop_front();
      y.relay_blocked = false;
      if (!y.out.empty()) start_relay(w);
      if (!y.held.empty()) worker_flush(w);
   }

   void sample() {
      if (now_ > cfg_.duration) return;
      for (const auto& node : topo_.nodes) {
         std::uint64_t done = 0;
         std::size_t queued = 0;
         for (std::size_t i = 0; i < workers_.size(); ++i) {
            if (topo_.workers[i].node != node) continue;
            done += workers_[i].processed_sample;
            workers_[i].processed_sample = 0;
            queued += workers_[i].input.size();
         }
         series_.push_back({now_, node, static_cast<double>(done) / cfg_.sample_interval, queued});
      }
      schedule(now_ + cfg_.sample_interval, Kind::Sample, 0);
   }

   SimReport report() {
      SimReport r;
      r.duration = cfg_.duration;
      r.warmup = warmup_;
      const double window = cfg_.duration - warmup_;
      r.sink = topo_.sink;
      r.sink_target = topo_.target_rate.at(topo_.sink);
      r.sink_achieved = static_cast<double>(sink_window_) / window;
      double compute = 0;
      for (const auto& node : topo_.nodes) {
         auto& nr = r.nodes[node];
         nr.target_rate = topo_.target_rate.at(node);
         std::uint64_t processed = 0;
         for (std::size_t i = 0; i < workers_.size(); ++i) {
            const auto& info = topo_.workers[i];
            if (info.node != node) continue;
            auto& y = workers_[i];
            nr.capacity += info.capacity;
            processed += y.processed_window;
            nr.processed += y.processed_total;
            nr.queue_high_watermark = std::max(nr.queue_high_watermark, y.high_watermark);
            nr.overhead_exec.insert(nr.overhead_exec.end(), y.overhead_exec.begin(), y.overhead_exec.end());
            nr.overhead_network.insert(nr.overhead_network.end(), y.overhead_network.begin(), y.overhead_network.end());
            compute += cfg_.charge == ChargeMode::FullHour ? info.price : info.price * std::min(1.0, y.busy_window / window);
         }
         nr.achieved_rate = static_cast<double>(processed) / window;
      }
      r.accrued_cost = CostBreakdown::of(compute, network_cost_ * 3600.0 / window);
      r.network_bytes = network_bytes_;
      r.fifo_violations = fifo_violations_;
      r.emitted_total = emitted_total_;
      r.sink_total = sink_total_;
      std::uint64_t in_flight = 0;
      for (const auto& y : workers_) in_flight += y.input.size() + y.held.size() + y.out.size() + (y.busy ? 1 : 0);
      for (const auto& s : sources_) in_flight += s.pending.size();
      r.in_flight = in_flight;
      r.series = std::move(series_);
      return r;
   }

   const Topology& topo_;
   const SimConfig& cfg_;
   std::mt19937_64 rng_;
   double warmup_ = 0;
   double now_ = 0;
   std::uint64_t event_seq_ = 0;
   std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
   std::vector<Worker> workers_;
   std::vector<Source> sources_;
   Sequencer sequencer_;
   double network_cost_ = 0, network_bytes_ = 0;
   std::uint64_t sink_window_ = 0, sink_total_ = 0, emitted_total_ = 0, fifo_violations_ = 0;
   std::vector<TimeSample> series_;
};
//---------------------------------------------------------------------------
//---------------------------------------------------------------------------
template <typename T>
class BoundedChannel {
public:
   explicit BoundedChannel(std::size_t capacity) : capacity_(capacity) {}

   bool push(T v) {
      std::unique_lock lock(mu_);
      not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
      if (closed_) return false;
      items_.push_back(std::move(v));
      high_ = std::max(high_, items_.size());
      not_empty_.notify_one();
      return true;
   }
   bool pop(T& out) {
      std::unique_lock lock(mu_);
      not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
      if (closed_) return false;
      out = std::move(items_.front());
      items_.pop_front();
      not_full_.notify_one();
      return true;
   }
   void close() {
      std::lock_guard lock(mu_);
      closed_ = true;
      not_full_.notify_all();
      not_empty_.notify_all();
   }
   std::size_t size() const {
      std::lock_guard lock(mu_);
      return items_.size();
   }
   std::size_t high_watermark() const {
      std::lock_guard lock(mu_);
      return high_;
   }

private:
   mutable std::mutex mu_;
   std::condition_variable not_full_, not_empty_;
   std::deque<T> items_;
   std::size_t capacity_;
   std::size_t high_ = 0;
   bool closed_ = false;
};
//---------------------------------------------------------------------------
/// Counters owned by one thread; read after join.
struct ThreadTally {
   std::uint64_t sink_window = 0, sink_total = 0, emitted = 0, fifo_violations = 0;
   std::uint64_t processed_window = 0, processed_total = 0;
   double network_cost = 0, network_bytes = 0, busy_window = 0;
   std::vector<double> overhead_exec, overhead_network;
};
//---------------------------------------------------------------------------
SimReport run_wall_clock(const Topology& topo, const SimConfig& cfg) {
   using Clock = std::chrono::steady_clock;
   const auto start = Clock::now();
   const double warmup = cfg.duration * cfg.warmup_fraction;
   const double window = cfg.duration - warmup;
   auto sim_now = [&] { return std::chrono::duration<double>(Clock::now() - start).count() / cfg.time_scale; };
   auto sleep_sim = [&](double s) {
      if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s * cfg.time_scale));
   };
   auto counted = [&](double t) { return t >= warmup && t <= cfg.duration; };

   struct Item {
      int sender;
      std::uint64_t seq;
   };
   const std::size_t n = topo.workers.size();
   std::vector<std::unique_ptr<BoundedChannel<Item>>> inputs;
   std::vector<std::unique_ptr<BoundedChannel<Message>>> relays;
   for (std::size_t i = 0; i < n; ++i) {
      inputs.push_back(std::make_unique<BoundedChannel<Item>>(cfg.queue_capacity));
      relays.push_back(std::make_unique<BoundedChannel<Message>>(cfg.queue_capacity));
   }
   std::vector<ThreadTally> source_tally(topo.sources.size()), compute_tally(n), relay_tally(n);
   std::vector<std::atomic<std::uint64_t>> progress(n);
   std::atomic<bool> stop{false};
   const int sources = static_cast<int>(topo.sources.size());

   // send-side sequencing and pricing shared by sources and relays
   auto deliver = [&](const Message& m, ThreadTally& tally) {
      const double t = sim_now();
      if (m.to < 0) {
         ++tally.sink_total;
         if (counted(t)) ++tally.sink_window;
         return true;
      }
      if (!inputs[m.to]->push({m.sender, m.seq})) return false;
      if (counted(t)) {
         tally.network_cost += topo.price_per_byte[m.from_tier][topo.workers[m.to].tier] * m.bytes;
         tally.network_bytes += m.bytes;
      }
      return true;
   };

   std::vector<std::thread> threads;
   for (int s = 0; s < sources; ++s)
      threads.emplace_back([&, s] {
         const auto& info = topo.sources[s];
         if (!(info.rate > 0)) return;
         std::vector<Dispatcher> dispatch;
         for (const auto& e : info.children) dispatch.emplace_back(e);
         std::map<int, std::uint64_t> seq;
         auto& tally = source_tally[s];
         double next = 0;
         while (!stop) {
            sleep_sim(next - sim_now());
            if (sim_now() >= cfg.duration) break;
            ++tally.emitted;
            for (auto& d : dispatch) {
               Message m;
               m.to = d.sink() ? -1 : d.next();
               m.bytes = d.bytes();
               m.sender = s;
               if (m.to >= 0) m.seq = ++seq[m.to];
               if (!deliver(m, tally)) return;
            }
            next += 1.0 / info.rate;
         }
      });
   for (std::size_t i = 0; i < n; ++i) {
      threads.emplace_back([&, i] {
         const auto& info = topo.workers[i];
         std::mt19937_64 rng(cfg.seed + i);
         std::vector<Dispatcher> dispatch;
         for (const auto& e : info.children) dispatch.emplace_back(e);
         std::map<int, std::uint64_t> sent, seen;
         auto& tally = compute_tally[i];
         const double mean = 1.0 / info.capacity;
         double accumulator = 0;
         Item item;
         while (inputs[i]->pop(item)) {
            auto& last = seen[item.sender];
            if (item.seq <= last) ++tally.fifo_violations;
            last = std::max(last, item.seq);
            const double begin = sim_now();
            const double service = service_sample(mean, cfg.latency_jitter, rng);
            sleep_sim(service);
            const double end = sim_now();
            ++tally.processed_total;
            progress[i].fetch_add(1, std::memory_order_relaxed);
            const double lo = std::max(begin, warmup), hi = std::min(end, cfg.duration);
            if (hi > lo) tally.busy_window += hi - lo;
            const bool measure = counted(end);
            if (measure) ++tally.processed_window;
            accumulator += info.ratio;
            const auto outputs = static_cast<long>(std::floor(accumulator + 1e-9));
            accumulator -= static_cast<double>(outputs);
            double exec = 0, network = 0;
            for (long k = 0; k < outputs; ++k)
               for (auto& d : dispatch) {
                  Message m;
                  m.to = d.sink() ? -1 : d.next();
                  m.bytes = d.bytes();
                  m.from_tier = info.tier;
                  m.sender = sources + static_cast<int>(i);
                  if (m.to >= 0) m.seq = ++sent[m.to];
                  m.relay_time = relay_time(cfg.relay, m.bytes, mean);
                  auto [fixed, sized] = relay_split(cfg.relay, m.bytes, mean);
                  exec += fixed;
                  network += sized;
                  if (!relays[i]->push(m)) return;
               }
            if (measure && service > 0) {
               tally.overhead_exec.push_back(exec / service);
               tally.overhead_network.push_back(network / service);
            }
         }
      });
      threads.emplace_back([&, i] {
         Message m;
         while (relays[i]->pop(m)) {
            sleep_sim(m.relay_time);
            if (!deliver(m, relay_tally[i])) return;
         }
      });
   }

   std::vector<TimeSample> series;
   std::vector<std::uint64_t> last(n, 0);
   for (double t = cfg.sample_interval; cfg.sample_interval > 0 && t <= cfg.duration; t += cfg.sample_interval) {
      sleep_sim(t - sim_now());
      for (const auto& node : topo.nodes) {
         std::uint64_t done = 0;
         std::size_t queued = 0;
         for (std::size_t i = 0; i < n; ++i) {
            if (topo.workers[i].node != node) continue;
            auto p = progress[i].load(std::memory_order_relaxed);
            done += p - last[i];
            last[i] = p;
            queued += inputs[i]->size();
         }
         series.push_back({t, node, static_cast<double>(done) / cfg.sample_interval, queued});
      }
   }
   sleep_sim(cfg.duration - sim_now());
   stop = true;
   for (std::size_t i = 0; i < n; ++i) {
      inputs[i]->close();
      relays[i]->close();
   }
   for (auto& t : threads) t.join();

   SimReport r;
   r.duration = cfg.duration;
   r.warmup = warmup;
   r.sink = topo.sink;
   r.sink_target = topo.target_rate.at(topo.sink);
   double network = 0, compute = 0;
   for (const auto& t : source_tally) {
      r.sink_total += t.sink_total;
      r.sink_achieved += static_cast<double>(t.sink_window);
      r.emitted_total += t.emitted;
      network += t.network_cost;
      r.network_bytes += t.network_bytes;
   }
   for (const auto& t : relay_tally) {
      r.sink_total += t.sink_total;
      r.sink_achieved += static_cast<double>(t.sink_window);
      network += t.network_cost;
      r.network_bytes += t.network_bytes;
   }
   r.sink_achieved /= window;
   for (const auto& node : topo.nodes) {
      auto& nr = r.nodes[node];
      nr.target_rate = topo.target_rate.at(node);
      std::uint64_t processed = 0;
      for (std::size_t i = 0; i < n; ++i) {
         const auto& info = topo.workers[i];
         if (info.node != node) continue;
         const auto& t = compute_tally[i];
         nr.capacity += info.capacity;
         processed += t.processed_window;
         nr.processed += t.processed_total;
         nr.queue_high_watermark = std::max(nr.queue_high_watermark, inputs[i]->high_watermark());
         nr.overhead_exec.insert(nr.overhead_exec.end(), t.overhead_exec.begin(), t.overhead_exec.end());
         nr.overhead_network.insert(nr.overhead_network.end(), t.overhead_network.begin(), t.overhead_network.end());
         r.fifo_violations += t.fifo_violations;
         compute += cfg.charge == ChargeMode::FullHour ? info.price : info.price * std::min(1.0, t.busy_window / window);
      }
      nr.achieved_rate = static_cast<double>(processed) / window;
   }
   r.accrued_cost = CostBreakdown::of(compute, network * 3600.0 / window);
   r.series = std::move(series);
   return r;
}
//---------------------------------------------------------------------------
double nearest_rank(std::vector<double> v, double q) {
   if (v.empty()) return 0.0;
   std::sort(v.begin(), v.end());
   auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
   return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::string to_string(SimMode m) {
   return m == SimMode::VirtualTime ? "virtual-time" : "wall-clock";
}
//---------------------------------------------------------------------------
SimMode sim_mode_from_string(const std::string& s) {
   if (s == "virtual-time") return SimMode::VirtualTime;
   if (s == "wall-clock") return SimMode::WallClock;
   throw InputError("unknown simulation mode '" + s + "'");
}
//---------------------------------------------------------------------------
SimReport run_simulation(const Instance& instance, const PhysicalPlan& plan, const SimConfig& cfg) {
   if (!(cfg.duration > 0)) throw InputError("simulation duration must be positive");
   if (cfg.latency_jitter < 0) throw InputError("latency jitter must be >= 0");
   if (cfg.queue_capacity < 1) throw InputError("queue capacity must be >= 1");
   if (!(cfg.load_factor > 0)) throw InputError("load factor must be positive");
   if (cfg.warmup_fraction < 0 || cfg.warmup_fraction >= 1) throw InputError("warm-up fraction must be in [0, 1)");
   if (cfg.mode == SimMode::WallClock && !(cfg.time_scale > 0)) throw InputError("time scale must be positive");
   const auto topo = build_topology(instance, plan, cfg);
   if (cfg.mode == SimMode::WallClock) return run_wall_clock(topo, cfg);
   return VirtualSim(topo, cfg).run();
}
//---------------------------------------------------------------------------
std::map<std::string, OverheadSummary> measure_overhead(const SimReport& report) {
   std::map<std::string, OverheadSummary> out;
   for (const auto& [node, nr] : report.nodes) {
      std::vector<double> total(nr.overhead_exec.size());
      for (std::size_t i = 0; i < total.size(); ++i) total[i] = nr.overhead_exec[i] + nr.overhead_network[i];
      auto& s = out[node];
      s.exec_p50 = nearest_rank(nr.overhead_exec, 0.5);
      s.exec_p90 = nearest_rank(nr.overhead_exec, 0.9);
      s.network_p50 = nearest_rank(nr.overhead_network, 0.5);
      s.network_p90 = nearest_rank(nr.overhead_network, 0.9);
      s.total_p50 = nearest_rank(total, 0.5);
      s.total_p90 = nearest_rank(total, 0.9);
   }
   return out;
}
//---------------------------------------------------------------------------
nlohmann::json report_to_json(const SimReport& report, const SimConfig& cfg) {
   using nlohmann::json;
   json nodes = json::object();
   auto overhead = measure_overhead(report);
   for (const auto& [id, nr] : report.nodes) {
      const auto& o = overhead.at(id);
      nodes[id] = {{"target_rate", nr.target_rate},
                   {"achieved_rate", nr.achieved_rate},
                   {"capacity", nr.capacity},
                   {"processed", nr.processed},
                   {"queue_high_watermark", nr.queue_high_watermark},
                   {"overhead", {{"exec_p50", o.exec_p50},
                                 {"exec_p90", o.exec_p90},
                                 {"network_p50", o.network_p50},
                                 {"network_p90", o.network_p90},
                                 {"total_p50", o.total_p50},
                                 {"total_p90", o.total_p90}}}};
   }
   return {{"schema_version", kSchemaVersion},
           {"kind", "sim_report"},
           {"config", {{"duration", cfg.duration},
                       {"percentile", to_string(cfg.latency_percentile)},
                       {"latency_jitter", cfg.latency_jitter},
                       {"mode", to_string(cfg.mode)},
                       {"seed", cfg.seed},
                       {"queue_capacity", cfg.queue_capacity},
                       {"warmup_fraction", cfg.warmup_fraction},
                       {"load_factor", cfg.load_factor},
                       {"charge_mode", to_string(cfg.charge)},
                       {"relay", {{"per_message_s", cfg.relay.per_message_s},
                                  {"per_byte_s", cfg.relay.per_byte_s},
                                  {"relative", cfg.relay.relative}}}}},
           {"sink", {{"id", report.sink}, {"target_rate", report.sink_target}, {"achieved_rate", report.sink_achieved}}},
           {"nodes", nodes},
           {"accrued_cost", {{"compute", report.accrued_cost.compute},
                             {"network", report.accrued_cost.network},
                             {"total", report.accrued_cost.total}}},
           {"network_bytes", report.network_bytes},
           {"fifo_violations", report.fifo_violations},
           {"emitted_total", report.emitted_total},
           {"sink_total", report.sink_total},
           {"in_flight", report.in_flight}};
}
//---------------------------------------------------------------------------
std::string time_series_csv(const SimReport& report) {
   std::ostringstream os;
   os.precision(10);
   os << "time_s,node,throughput,queue_length\n";
   for (const auto& s : report.series) os << s.time << ',' << s.node << ',' << s.throughput << ',' << s.queue_length << '\n';
   return os.str();
}
//---------------------------------------------------------------------------
}  // namespace hetplan
