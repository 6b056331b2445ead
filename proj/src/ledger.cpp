#include "uavdt/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uavdt/errors.hpp"

namespace uavdt {

const char* to_string(TaskStatus s) {
    switch (s) {
        case TaskStatus::Submitted: return "SUBMITTED";
        case TaskStatus::Validated: return "VALIDATED";
        case TaskStatus::Assigned: return "ASSIGNED";
        case TaskStatus::Executed: return "EXECUTED";
        case TaskStatus::Verified: return "VERIFIED";
        case TaskStatus::Settled: return "SETTLED";
        case TaskStatus::Refunded: return "REFUNDED";
    }
    return "?";
}

namespace {

void write_spec(ByteWriter& w, const TaskSpec& spec) {
    w.put_string(spec.scene_ref);
    w.put_string(spec.radio_ref);
    w.put_u32(static_cast<std::uint32_t>(spec.positions.size()));
    for (const Vec3& p : spec.positions) {
        w.put_f64(p.x);
        w.put_f64(p.y);
        w.put_f64(p.z);
    }
    w.put_u32(static_cast<std::uint32_t>(spec.receivers));
}

TaskSpec read_spec(ByteReader& r) {
    TaskSpec spec;
    spec.scene_ref = r.get_string();
    spec.radio_ref = r.get_string();
    const std::uint32_t n = r.get_u32();
    spec.positions.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Vec3 p;
        p.x = r.get_f64();
        p.y = r.get_f64();
        p.z = r.get_f64();
        spec.positions.push_back(p);
    }
    spec.receivers = static_cast<int>(r.get_u32());
    return spec;
}

void put_digest(ByteWriter& w, const Digest& d) {
    w.bytes.insert(w.bytes.end(), d.begin(), d.end());
}

Digest get_digest(ByteReader& r) {
    Digest d{};
    for (auto& b : d) b = r.get_u8();
    return d;
}

} // namespace

void write_event(ByteWriter& w, const Event& e) {
    w.put_u8(static_cast<std::uint8_t>(e.kind));
    w.put_string(e.account);
    w.put_i64(e.amount);
    w.put_string(e.node);
    w.put_i64(e.stake);
    w.put_u32(static_cast<std::uint32_t>(e.capacity));
    w.put_u8(e.honest ? 1 : 0);
    w.put_u64(e.task);
    w.put_string(e.requester);
    write_spec(w, e.spec);
    w.put_i64(e.payment);
    w.put_i64(e.gas_limit);
    w.put_i64(e.gas_consumed);
    w.put_u32(static_cast<std::uint32_t>(e.result.size()));
    for (double v : e.result) w.put_f64(v);
    put_digest(w, e.result_hash);
    w.put_u8(e.verified ? 1 : 0);
    w.put_i64(e.slash);
    w.put_string(e.reason);
}

Event read_event(ByteReader& r) {
    Event e;
    e.kind = static_cast<EventKind>(r.get_u8());
    e.account = r.get_string();
    e.amount = r.get_i64();
    e.node = r.get_string();
    e.stake = r.get_i64();
    e.capacity = static_cast<int>(r.get_u32());
    e.honest = r.get_u8() != 0;
    e.task = r.get_u64();
    e.requester = r.get_string();
    e.spec = read_spec(r);
    e.payment = r.get_i64();
    e.gas_limit = r.get_i64();
    e.gas_consumed = r.get_i64();
    const std::uint32_t n = r.get_u32();
    e.result.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) e.result.push_back(r.get_f64());
    e.result_hash = get_digest(r);
    e.verified = r.get_u8() != 0;
    e.slash = r.get_i64();
    e.reason = r.get_string();
    return e;
}

Digest block_hash(const Block& b) {
    ByteWriter w;
    put_digest(w, b.prev_hash);
    w.put_u64(b.height);
    w.put_u32(static_cast<std::uint32_t>(b.events.size()));
    for (const Event& e : b.events) write_event(w, e);
    return w.digest();
}

Digest result_digest(std::span<const double> result) {
    ByteWriter w;
    w.put_u32(static_cast<std::uint32_t>(result.size()));
    for (double v : result) w.put_f64(v);
    return w.digest();
}

std::vector<double> corrupt_result(std::vector<double> result) {
    if (result.empty())
        result.push_back(1.0);
    else
        result[0] += 1.0;
    return result;
}

namespace {

void validate_ledger_config(const LedgerConfig& c) {
    if (c.gas_price < 0) throw ConfigError("ledger: gas_price must be >= 0");
    if (c.gas_base < 0 || c.gas_per_eval < 0)
        throw ConfigError("ledger: gas cost coefficients must be >= 0");
    if (!(c.slash_fraction >= 0.0 && c.slash_fraction <= 1.0))
        throw ConfigError("ledger: slash_fraction must be in [0,1]");
    if (c.finality_depth < 0) throw ConfigError("ledger: finality_depth must be >= 0");
    if (c.validators < 1) throw ConfigError("ledger: validators must be >= 1");
    if (c.quorum_num < 1 || c.quorum_den < c.quorum_num)
        throw ConfigError("ledger: quorum fraction must satisfy 1 <= num <= den");
}

} // namespace

Ledger::Ledger(const GenesisConfig& genesis) {
    validate_ledger_config(genesis.config);
    config_ = genesis.config;

    std::vector<Event> events;
    for (const Account& a : genesis.accounts) {
        if (a.balance < 0) throw ConfigError("ledger: genesis balance of '" + a.id + "' negative");
        if (accounts_.count(a.id)) throw ConfigError("ledger: duplicate account '" + a.id + "'");
        Event e;
        e.kind = EventKind::MintAccount;
        e.account = a.id;
        e.amount = a.balance;
        apply_event(e);
        events.push_back(std::move(e));
    }
    for (const DePinNode& n : genesis.nodes) {
        if (nodes_.count(n.id)) throw ConfigError("ledger: duplicate node '" + n.id + "'");
        if (!accounts_.count(n.account))
            throw ConfigError("ledger: node '" + n.id + "' references unknown account");
        if (n.stake < 0) throw ConfigError("ledger: node '" + n.id + "' stake negative");
        if (n.capacity < 1) throw ConfigError("ledger: node '" + n.id + "' capacity must be >= 1");
        if (n.active_tasks != 0)
            throw ConfigError("ledger: node '" + n.id + "' must start with no active tasks");
        if (n.stake > accounts_.at(n.account).balance)
            throw ConfigError("ledger: node '" + n.id + "' stake exceeds its account balance");
        Event e;
        e.kind = EventKind::RegisterNode;
        e.node = n.id;
        e.account = n.account;
        e.stake = n.stake;
        e.capacity = n.capacity;
        e.honest = n.honest;
        apply_event(e);
        events.push_back(std::move(e));
    }
    seal_block(std::move(events));
    check_conservation();
}

Token Ledger::conservation_sum() const {
    Token sum = burned_;
    for (const auto& [id, a] : accounts_) sum += a.balance;
    for (const auto& [id, e] : escrows_)
        if (e.state == EscrowState::Locked) sum += e.locked;
    return sum;
}

void Ledger::check_conservation() const {
    const Token sum = conservation_sum();
    if (sum != genesis_mint_)
        throw InvariantError("ledger: token conservation violated: balances+escrow+burned=" +
                             std::to_string(sum) + " but genesis mint=" +
                             std::to_string(genesis_mint_));
}

std::int64_t Ledger::required_gas(const TaskSpec& spec) const {
    return config_.gas_base + config_.gas_per_eval *
                                  static_cast<std::int64_t>(spec.positions.size()) *
                                  static_cast<std::int64_t>(spec.receivers);
}

std::int64_t Ledger::finality_depth_of(TaskId task) const {
    const auto it = tasks_.find(task);
    if (it == tasks_.end()) throw std::runtime_error("ledger: unknown task " + std::to_string(task));
    if (it->second.terminal_block < 0) return -1;
    return static_cast<std::int64_t>(blocks_.size()) - 1 - it->second.terminal_block;
}

namespace {

// Tokens spendable from an account once node stakes reserved against it are
// set aside.
Token spendable_balance(const std::map<std::string, Account>& accounts,
                        const std::map<std::string, DePinNode>& nodes, const std::string& id) {
    Token balance = accounts.at(id).balance;
    for (const auto& [nid, n] : nodes)
        if (n.account == id) balance -= n.stake;
    return balance;
}

} // namespace

bool Ledger::well_formed(const Event& submission, std::string& reason) const {
    if (!accounts_.count(submission.requester)) {
        reason = "unknown requester account '" + submission.requester + "'";
        return false;
    }
    if (submission.payment <= 0) {
        reason = "payment must be positive";
        return false;
    }
    if (submission.gas_limit < 0) {
        reason = "gas_limit must be >= 0";
        return false;
    }
    const Token cost = submission.payment + submission.gas_limit * config_.gas_price;
    const Token avail = spendable_balance(accounts_, nodes_, submission.requester);
    if (avail < cost) {
        reason = "insufficient balance at validation: required " + std::to_string(cost) +
                 ", available " + std::to_string(avail);
        return false;
    }
    return true;
}

TaskId Ledger::submit_request(const std::string& requester, const TaskSpec& spec, Token payment,
                              std::int64_t gas_limit) {
    if (!accounts_.count(requester))
        throw std::runtime_error("submit_request: unknown account '" + requester + "'");
    if (payment <= 0) throw std::runtime_error("submit_request: payment must be positive");
    if (gas_limit < 0) throw std::runtime_error("submit_request: gas_limit must be >= 0");
    const Token cost = payment + gas_limit * config_.gas_price;
    const Token avail = spendable_balance(accounts_, nodes_, requester);
    if (avail < cost)
        throw std::runtime_error("submit_request: rejected: required " + std::to_string(cost) +
                                 " tokens, available " + std::to_string(avail));

    const TaskId id = next_task_id_++;
    Task task;
    task.id = id;
    task.requester = requester;
    task.spec = spec;
    task.payment = payment;
    task.gas_limit = gas_limit;
    task.status = TaskStatus::Submitted;
    tasks_[id] = std::move(task);

    Event e;
    e.kind = EventKind::TaskValidated; // finalized by the next validation round
    e.task = id;
    e.requester = requester;
    e.spec = spec;
    e.payment = payment;
    e.gas_limit = gas_limit;
    pending_submissions_.push_back(std::move(e));
    return id;
}

Block Ledger::validate_round() {
    if (pending_submissions_.empty() && pending_events_.empty())
        throw std::runtime_error("validate_round: pending pool is empty");

    std::vector<Event> events = std::move(pending_events_);
    pending_events_.clear();

    for (Event& submission : pending_submissions_) {
        std::string reason;
        // Simulated quorum: every validator approves a well-formed
        // transaction, so a full roster always clears quorum_num/quorum_den.
        if (well_formed(submission, reason)) {
            apply_event(submission);
            events.push_back(std::move(submission));
        } else {
            submission.kind = EventKind::TaskExcluded;
            submission.reason = reason;
            apply_event(submission);
            events.push_back(std::move(submission));
        }
    }
    pending_submissions_.clear();

    const Block& sealed = seal_block(std::move(events));
    check_conservation();
    return sealed;
}

std::optional<std::string> Ledger::select_node(TaskId task) {
    auto it = tasks_.find(task);
    if (it == tasks_.end())
        throw std::runtime_error("select_node: unknown task " + std::to_string(task));
    if (it->second.status != TaskStatus::Validated)
        throw std::runtime_error("select_node: task " + std::to_string(task) + " is " +
                                 to_string(it->second.status) + ", expected VALIDATED");

    const DePinNode* best = nullptr;
    Token best_score = -1;
    for (const auto& [id, node] : nodes_) { // map order = ascending id = tie-break
        if (node.free_capacity() < 1) continue;
        const Token score = node.stake * node.free_capacity();
        if (score > best_score) {
            best = &node;
            best_score = score;
        }
    }
    if (best == nullptr) return std::nullopt;
    const std::string chosen = best->id;

    Event e;
    e.kind = EventKind::NodeSelected;
    e.task = task;
    e.node = chosen;
    apply_event(e);
    pending_events_.push_back(std::move(e));
    check_conservation();
    return chosen;
}

ExecutionRecord Ledger::execute_task(TaskId task, const ComputeHook& compute) {
    auto it = tasks_.find(task);
    if (it == tasks_.end())
        throw std::runtime_error("execute_task: unknown task " + std::to_string(task));
    Task& t = it->second;
    if (t.status != TaskStatus::Assigned)
        throw std::runtime_error("execute_task: task " + std::to_string(task) + " is " +
                                 to_string(t.status) + ", expected ASSIGNED");

    const std::int64_t required = required_gas(t.spec);
    ExecutionRecord record;
    record.task = task;

    if (required > t.gas_limit) {
        Event e;
        e.kind = EventKind::TaskGasExhausted;
        e.task = task;
        e.gas_consumed = t.gas_limit; // capped at the limit
        e.reason = "gas exhausted: required " + std::to_string(required) + " > limit " +
                   std::to_string(t.gas_limit);
        apply_event(e);
        pending_events_.push_back(std::move(e));
        check_conservation();
        record.gas_consumed = t.gas_limit;
        record.gas_exhausted = true;
        return record;
    }

    std::vector<double> result = compute(t.spec);
    if (!nodes_.at(t.node).honest) result = corrupt_result(std::move(result));

    Event e;
    e.kind = EventKind::TaskExecuted;
    e.task = task;
    e.gas_consumed = required;
    e.result = result;
    e.result_hash = result_digest(result);
    apply_event(e);
    pending_events_.push_back(e);
    check_conservation();

    record.gas_consumed = required;
    record.result = std::move(result);
    record.result_hash = e.result_hash;
    return record;
}

SettlementRecord Ledger::verify_and_settle(TaskId task, const ComputeHook& compute) {
    auto it = tasks_.find(task);
    if (it == tasks_.end())
        throw std::runtime_error("verify_and_settle: unknown task " + std::to_string(task));
    Task& t = it->second;
    if (t.status != TaskStatus::Executed)
        throw std::runtime_error("verify_and_settle: task " + std::to_string(task) + " is " +
                                 to_string(t.status) + ", expected EXECUTED");

    const std::vector<double> reference = compute(t.spec);
    const bool verified = result_digest(reference) == t.result_hash;

    Token slash = 0;
    if (!verified) {
        const Token stake = nodes_.at(t.node).stake;
        slash = std::min<Token>(
            stake, static_cast<Token>(std::floor(static_cast<double>(stake) * config_.slash_fraction)));
    }

    Event e;
    e.kind = EventKind::TaskSettled;
    e.task = task;
    e.verified = verified;
    e.slash = slash;
    e.gas_consumed = t.gas_consumed;

    const Token locked = escrows_.at(task).locked;
    const Token gas_burn = verified ? t.gas_consumed * config_.gas_price : 0;

    apply_event(e);
    pending_events_.push_back(std::move(e));
    check_conservation();

    SettlementRecord record;
    record.task = task;
    record.verified = verified;
    record.paid_to_node = verified ? t.payment : 0;
    record.gas_refund = verified ? locked - t.payment - gas_burn : 0;
    record.gas_burned = gas_burn;
    record.slashed = slash;
    return record;
}

Notification Ledger::notify(TaskId task) {
    auto it = tasks_.find(task);
    if (it == tasks_.end())
        throw std::runtime_error("notify: unknown task " + std::to_string(task));
    Task& t = it->second;
    if (t.status != TaskStatus::Settled && t.status != TaskStatus::Refunded)
        throw std::runtime_error("notify: task " + std::to_string(task) + " is " +
                                 to_string(t.status) + ", not terminal");
    if (t.delivered)
        throw std::runtime_error("notify: task " + std::to_string(task) + " already delivered");
    const std::int64_t depth = finality_depth_of(task);
    if (depth < config_.finality_depth)
        throw std::runtime_error("notify: task " + std::to_string(task) + " not final: depth " +
                                 std::to_string(depth) + " < required " +
                                 std::to_string(config_.finality_depth));

    Event e;
    e.kind = EventKind::TaskNotified;
    e.task = task;
    apply_event(e);
    pending_events_.push_back(std::move(e));

    Notification n;
    n.task = task;
    n.settled = t.status == TaskStatus::Settled;
    if (n.settled)
        n.result = t.result;
    else
        n.reason = t.refund_reason;
    return n;
}

void Ledger::apply_event(const Event& e) {
    switch (e.kind) {
        case EventKind::MintAccount: {
            accounts_[e.account] = Account{e.account, e.amount};
            genesis_mint_ += e.amount;
            break;
        }
        case EventKind::RegisterNode: {
            DePinNode n;
            n.id = e.node;
            n.account = e.account;
            n.stake = e.stake;
            n.capacity = e.capacity;
            n.honest = e.honest;
            nodes_[e.node] = std::move(n);
            break;
        }
        case EventKind::TaskValidated: {
            Task t;
            t.id = e.task;
            t.requester = e.requester;
            t.spec = e.spec;
            t.payment = e.payment;
            t.gas_limit = e.gas_limit;
            t.status = TaskStatus::Validated;
            tasks_[e.task] = std::move(t);
            const Token locked = e.payment + e.gas_limit * config_.gas_price;
            accounts_.at(e.requester).balance -= locked;
            escrows_[e.task] = Escrow{e.task, locked, EscrowState::Locked};
            next_task_id_ = std::max(next_task_id_, e.task + 1);
            break;
        }
        case EventKind::TaskExcluded: {
            Task t;
            t.id = e.task;
            t.requester = e.requester;
            t.spec = e.spec;
            t.payment = e.payment;
            t.gas_limit = e.gas_limit;
            t.status = TaskStatus::Refunded;
            t.refund_reason = e.reason;
            tasks_[e.task] = std::move(t);
            next_task_id_ = std::max(next_task_id_, e.task + 1);
            break;
        }
        case EventKind::NodeSelected: {
            Task& t = tasks_.at(e.task);
            t.status = TaskStatus::Assigned;
            t.node = e.node;
            nodes_.at(e.node).active_tasks += 1;
            break;
        }
        case EventKind::TaskExecuted: {
            Task& t = tasks_.at(e.task);
            t.status = TaskStatus::Executed;
            t.gas_consumed = e.gas_consumed;
            t.result = e.result;
            t.result_hash = e.result_hash;
            nodes_.at(t.node).active_tasks -= 1;
            break;
        }
        case EventKind::TaskGasExhausted: {
            Task& t = tasks_.at(e.task);
            Escrow& esc = escrows_.at(e.task);
            const Token burn = e.gas_consumed * config_.gas_price;
            accounts_.at(t.requester).balance += esc.locked - burn;
            burned_ += burn;
            esc.state = EscrowState::Refunded;
            t.status = TaskStatus::Refunded;
            t.gas_consumed = e.gas_consumed;
            t.refund_reason = e.reason;
            nodes_.at(t.node).active_tasks -= 1;
            break;
        }
        case EventKind::TaskSettled: {
            Task& t = tasks_.at(e.task);
            Escrow& esc = escrows_.at(e.task);
            if (e.verified) {
                const Token burn = e.gas_consumed * config_.gas_price;
                DePinNode& node = nodes_.at(t.node);
                accounts_.at(node.account).balance += t.payment;
                accounts_.at(t.requester).balance += esc.locked - t.payment - burn;
                burned_ += burn;
                esc.state = EscrowState::Released;
                t.status = TaskStatus::Verified; // transient, settles below
                t.status = TaskStatus::Settled;
            } else {
                accounts_.at(t.requester).balance += esc.locked;
                esc.state = EscrowState::Refunded;
                DePinNode& node = nodes_.at(t.node);
                node.stake -= e.slash;
                accounts_.at(node.account).balance -= e.slash;
                burned_ += e.slash;
                t.status = TaskStatus::Refunded;
                t.refund_reason = "verification failed: result hash mismatch";
                if (node.stake < 0 || accounts_.at(node.account).balance < 0)
                    throw InvariantError("ledger: slash drove node '" + node.id + "' negative");
            }
            break;
        }
        case EventKind::TaskNotified: {
            tasks_.at(e.task).delivered = true;
            break;
        }
    }
}

const Block& Ledger::seal_block(std::vector<Event> events) {
    Block b;
    b.height = blocks_.size();
    b.prev_hash = blocks_.empty() ? Digest{} : blocks_.back().hash;
    b.events = std::move(events);
    b.hash = block_hash(b);
    for (const Event& e : b.events) {
        if (e.kind == EventKind::TaskSettled || e.kind == EventKind::TaskGasExhausted ||
            e.kind == EventKind::TaskExcluded)
            tasks_.at(e.task).terminal_block = static_cast<std::int64_t>(b.height);
    }
    blocks_.push_back(std::move(b));
    return blocks_.back();
}

Digest Ledger::state_digest() const {
    ByteWriter w;
    w.put_u32(static_cast<std::uint32_t>(accounts_.size()));
    for (const auto& [id, a] : accounts_) {
        w.put_string(id);
        w.put_i64(a.balance);
    }
    w.put_u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const auto& [id, n] : nodes_) {
        w.put_string(id);
        w.put_string(n.account);
        w.put_i64(n.stake);
        w.put_u32(static_cast<std::uint32_t>(n.capacity));
        w.put_u8(n.honest ? 1 : 0);
        w.put_u32(static_cast<std::uint32_t>(n.active_tasks));
    }
    w.put_u32(static_cast<std::uint32_t>(tasks_.size()));
    for (const auto& [id, t] : tasks_) {
        w.put_u64(id);
        w.put_string(t.requester);
        write_spec(w, t.spec);
        w.put_i64(t.payment);
        w.put_i64(t.gas_limit);
        w.put_u8(static_cast<std::uint8_t>(t.status));
        w.put_string(t.node);
        w.put_i64(t.gas_consumed);
        w.put_u32(static_cast<std::uint32_t>(t.result.size()));
        for (double v : t.result) w.put_f64(v);
        put_digest(w, t.result_hash);
        w.put_string(t.refund_reason);
        w.put_u8(t.delivered ? 1 : 0);
        w.put_i64(t.terminal_block);
    }
    w.put_u32(static_cast<std::uint32_t>(escrows_.size()));
    for (const auto& [id, e] : escrows_) {
        w.put_u64(id);
        w.put_i64(e.locked);
        w.put_u8(static_cast<std::uint8_t>(e.state));
    }
    w.put_i64(burned_);
    w.put_i64(genesis_mint_);
    w.put_u64(next_task_id_);
    w.put_u32(static_cast<std::uint32_t>(blocks_.size()));
    for (const Block& b : blocks_) put_digest(w, b.hash);
    return w.digest();
}

bool Ledger::operator==(const Ledger& o) const {
    return config_ == o.config_ && accounts_ == o.accounts_ && nodes_ == o.nodes_ &&
           tasks_ == o.tasks_ && escrows_ == o.escrows_ && blocks_ == o.blocks_ &&
           burned_ == o.burned_ && genesis_mint_ == o.genesis_mint_ &&
           next_task_id_ == o.next_task_id_;
}

namespace {

constexpr char kLogMagic[] = "UAVDTLEDGER1\n";
constexpr std::size_t kLogMagicLen = sizeof(kLogMagic) - 1;

void append_record(std::vector<unsigned char>& out, const ByteWriter& w) {
    ByteWriter len;
    len.put_u32(static_cast<std::uint32_t>(w.bytes.size()));
    out.insert(out.end(), len.bytes.begin(), len.bytes.end());
    out.insert(out.end(), w.bytes.begin(), w.bytes.end());
}

} // namespace

void Ledger::write_log(const std::filesystem::path& path) const {
    std::vector<unsigned char> out(kLogMagic, kLogMagic + kLogMagicLen);

    ByteWriter header;
    header.put_string("sha-256"); // digest function pinned per run
    header.put_i64(config_.gas_price);
    header.put_i64(config_.gas_base);
    header.put_i64(config_.gas_per_eval);
    header.put_f64(config_.slash_fraction);
    header.put_u32(static_cast<std::uint32_t>(config_.finality_depth));
    header.put_u32(static_cast<std::uint32_t>(config_.validators));
    header.put_u32(static_cast<std::uint32_t>(config_.quorum_num));
    header.put_u32(static_cast<std::uint32_t>(config_.quorum_den));
    append_record(out, header);

    for (const Block& b : blocks_) {
        ByteWriter w;
        w.put_u64(b.height);
        put_digest(w, b.prev_hash);
        w.put_u32(static_cast<std::uint32_t>(b.events.size()));
        for (const Event& e : b.events) write_event(w, e);
        put_digest(w, b.hash);
        append_record(out, w);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open ledger log for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("failed writing ledger log: " + path.string());
}

Ledger Ledger::replay(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open ledger log: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < kLogMagicLen ||
        !std::equal(kLogMagic, kLogMagic + kLogMagicLen, bytes.begin()))
        throw std::runtime_error("not a ledger log: " + path.string());

    std::size_t pos = kLogMagicLen;
    const auto next_record = [&](bool required) -> std::optional<ByteReader> {
        if (pos == bytes.size()) {
            if (required) throw std::runtime_error("ledger log truncated: missing header");
            return std::nullopt;
        }
        ByteReader len{std::span(bytes).subspan(pos), 0};
        const std::uint32_t n = len.get_u32();
        pos += 4;
        if (pos + n > bytes.size())
            throw std::runtime_error("ledger log truncated at offset " + std::to_string(pos));
        ByteReader r{std::span(bytes).subspan(pos, n), 0};
        pos += n;
        return r;
    };

    ByteReader header = *next_record(true);
    const std::string digest_name = header.get_string();
    if (digest_name != "sha-256")
        throw std::runtime_error("ledger log uses unsupported digest '" + digest_name + "'");

    Ledger l;
    l.config_.gas_price = header.get_i64();
    l.config_.gas_base = header.get_i64();
    l.config_.gas_per_eval = header.get_i64();
    l.config_.slash_fraction = header.get_f64();
    l.config_.finality_depth = static_cast<int>(header.get_u32());
    l.config_.validators = static_cast<int>(header.get_u32());
    l.config_.quorum_num = static_cast<int>(header.get_u32());
    l.config_.quorum_den = static_cast<int>(header.get_u32());

    while (auto rec = next_record(false)) {
        Block b;
        b.height = rec->get_u64();
        b.prev_hash = get_digest(*rec);
        const std::uint32_t n_events = rec->get_u32();
        for (std::uint32_t i = 0; i < n_events; ++i) b.events.push_back(read_event(*rec));
        b.hash = get_digest(*rec);
        if (!rec->done())
            throw std::runtime_error("ledger log: trailing bytes in block record at height " +
                                     std::to_string(b.height));

        if (b.height != l.blocks_.size())
            throw InvariantError("ledger log: block height " + std::to_string(b.height) +
                                 " out of order (expected " + std::to_string(l.blocks_.size()) +
                                 ")");
        const Digest expected_prev = l.blocks_.empty() ? Digest{} : l.blocks_.back().hash;
        if (b.prev_hash != expected_prev)
            throw InvariantError("ledger log: hash-chain break at height " +
                                 std::to_string(b.height) + " (previous-hash mismatch)");
        if (block_hash(b) != b.hash)
            throw InvariantError("ledger log: hash-chain break at height " +
                                 std::to_string(b.height) + " (block hash mismatch)");

        for (const Event& e : b.events) l.apply_event(e);
        for (const Event& e : b.events) {
            if (e.kind == EventKind::TaskSettled || e.kind == EventKind::TaskGasExhausted ||
                e.kind == EventKind::TaskExcluded)
                l.tasks_.at(e.task).terminal_block = static_cast<std::int64_t>(b.height);
        }
        l.blocks_.push_back(std::move(b));
    }

    l.check_conservation();
    return l;
}

} // namespace uavdt
