#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uavdt/hash.hpp"
#include "uavdt/vec3.hpp"

namespace uavdt {

using Token = std::int64_t;
using TaskId = std::uint64_t;

struct Account {
    std::string id;
    Token balance = 0;

    bool operator==(const Account&) const = default;
};

struct DePinNode {
    std::string id;
    std::string account;      // account credited on settlement
    Token stake = 0;          // reserved share of the account balance
    int capacity = 1;         // max concurrent tasks
    bool honest = true;       // fault-injection switch
    int active_tasks = 0;

    int free_capacity() const { return capacity - active_tasks; }
    bool operator==(const DePinNode&) const = default;
};

struct TaskSpec {
    std::string scene_ref;
    std::string radio_ref;
    std::vector<Vec3> positions;
    int receivers = 0; // R of the referenced scene; enters the gas formula

    bool operator==(const TaskSpec&) const = default;
};

enum class TaskStatus { Submitted, Validated, Assigned, Executed, Verified, Settled, Refunded };

const char* to_string(TaskStatus s);

struct Task {
    TaskId id = 0;
    std::string requester;
    TaskSpec spec;
    Token payment = 0;
    std::int64_t gas_limit = 0;
    TaskStatus status = TaskStatus::Submitted;
    std::string node;             // assigned node, empty before selection
    std::int64_t gas_consumed = 0;
    std::vector<double> result;   // per-position rewards reported by the node
    Digest result_hash{};
    std::string refund_reason;
    bool delivered = false;
    std::int64_t terminal_block = -1; // height of the block sealing the terminal event

    bool operator==(const Task&) const = default;
};

enum class EscrowState { Locked, Released, Refunded };

struct Escrow {
    TaskId task = 0;
    Token locked = 0;
    EscrowState state = EscrowState::Locked;

    bool operator==(const Escrow&) const = default;
};

enum class EventKind : std::uint8_t {
    MintAccount = 0,
    RegisterNode = 1,
    TaskValidated = 2, // carries the full submission; locks the escrow
    TaskExcluded = 3,  // malformed at validation time, recorded with a reason
    NodeSelected = 4,
    TaskExecuted = 5,
    TaskGasExhausted = 6,
    TaskSettled = 7, // verified=true: release; verified=false: refund + slash
    TaskNotified = 8,
};

// One tagged record; unused fields stay default so the canonical serialization
// (all fields, fixed order) is unambiguous.
struct Event {
    EventKind kind = EventKind::MintAccount;
    std::string account;
    Token amount = 0;
    std::string node;
    Token stake = 0;
    int capacity = 0;
    bool honest = true;
    TaskId task = 0;
    std::string requester;
    TaskSpec spec;
    Token payment = 0;
    std::int64_t gas_limit = 0;
    std::int64_t gas_consumed = 0;
    std::vector<double> result;
    Digest result_hash{};
    bool verified = false;
    Token slash = 0;
    std::string reason;

    bool operator==(const Event&) const = default;
};

void write_event(ByteWriter& w, const Event& e);
Event read_event(ByteReader& r);

struct Block {
    std::uint64_t height = 0;
    Digest prev_hash{};
    std::vector<Event> events;
    Digest hash{};

    bool operator==(const Block&) const = default;
};

// hash = SHA-256(prev_hash || height || canonical(events))
Digest block_hash(const Block& b);

struct LedgerConfig {
    Token gas_price = 1;
    std::int64_t gas_base = 100;     // g0
    std::int64_t gas_per_eval = 1;   // g1, applied per position per receiver
    double slash_fraction = 0.1;
    int finality_depth = 1;          // k: blocks on top of the sealing block
    int validators = 4;
    // Quorum: approvals * quorum_den >= roster * quorum_num.
    int quorum_num = 2;
    int quorum_den = 3;

    bool operator==(const LedgerConfig&) const = default;
};

struct GenesisConfig {
    LedgerConfig config;
    std::vector<Account> accounts;
    std::vector<DePinNode> nodes; // active_tasks must be 0; stake <= account balance
};

struct ExecutionRecord {
    TaskId task = 0;
    std::int64_t gas_consumed = 0;
    bool gas_exhausted = false;
    std::vector<double> result;
    Digest result_hash{};
};

struct SettlementRecord {
    TaskId task = 0;
    bool verified = false;
    Token paid_to_node = 0;
    Token gas_refund = 0;
    Token gas_burned = 0;
    Token slashed = 0;
};

struct Notification {
    TaskId task = 0;
    bool settled = false;
    std::vector<double> result; // empty on refund
    std::string reason;         // refund reason, empty on success
};

// Pure per-task computation supplied by the caller (the environment hook).
using ComputeHook = std::function<std::vector<double>(const TaskSpec&)>;

// Discrete-event ledger. Every state change flows through a single
// apply-event path; operations buffer their events and validate_round seals
// the buffer (plus newly validated submissions) into the next block, so
// replaying the block log reproduces the committed state exactly. Live state
// equals replayed state whenever the pending pool is empty.
class Ledger {
  public:
    explicit Ledger(const GenesisConfig& genesis);

    TaskId submit_request(const std::string& requester, const TaskSpec& spec, Token payment,
                          std::int64_t gas_limit);
    Block validate_round();
    std::optional<std::string> select_node(TaskId task);
    ExecutionRecord execute_task(TaskId task, const ComputeHook& compute);
    SettlementRecord verify_and_settle(TaskId task, const ComputeHook& compute);
    Notification notify(TaskId task);

    const std::map<std::string, Account>& accounts() const { return accounts_; }
    const std::map<std::string, DePinNode>& nodes() const { return nodes_; }
    const std::map<TaskId, Task>& tasks() const { return tasks_; }
    const std::map<TaskId, Escrow>& escrows() const { return escrows_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const LedgerConfig& config() const { return config_; }
    Token burned() const { return burned_; }
    Token genesis_mint() const { return genesis_mint_; }
    std::size_t pending_count() const { return pending_submissions_.size() + pending_events_.size(); }

    // Sigma balances + Sigma locked escrow + burned; throws InvariantError if
    // it drifts from the genesis mint.
    Token conservation_sum() const;
    void check_conservation() const;

    std::int64_t required_gas(const TaskSpec& spec) const;
    // tip_height - sealing height; -1 while the terminal event is unsealed.
    std::int64_t finality_depth_of(TaskId task) const;

    Digest state_digest() const; // canonical hash of the committed state

    void write_log(const std::filesystem::path& path) const;
    // Rebuilds a ledger from a log file; throws with the offending height on a
    // hash-chain break and with the byte offset on malformed records.
    static Ledger replay(const std::filesystem::path& path);

    bool operator==(const Ledger&) const;

  private:
    Ledger() = default;

    void apply_event(const Event& e);
    const Block& seal_block(std::vector<Event> events);
    bool well_formed(const Event& submission, std::string& reason) const;

    LedgerConfig config_;
    std::map<std::string, Account> accounts_;
    std::map<std::string, DePinNode> nodes_;
    std::map<TaskId, Task> tasks_;
    std::map<TaskId, Escrow> escrows_;
    std::vector<Block> blocks_;
    Token burned_ = 0;
    Token genesis_mint_ = 0;
    TaskId next_task_id_ = 1;
    std::vector<Event> pending_submissions_; // awaiting a validation round
    std::vector<Event> pending_events_;      // applied, awaiting block inclusion
};

// Canonical hash of a result vector (raw IEEE bits, big-endian).
Digest result_digest(std::span<const double> result);

// Deterministic corruption applied by dishonest nodes.
std::vector<double> corrupt_result(std::vector<double> result);

} // namespace uavdt
