#include "samdh/error.hpp"

namespace samdh {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::duplicate_name: return "DuplicateName";
    case ErrorCode::unknown_parent: return "UnknownParent";
    case ErrorCode::invalid_size: return "InvalidSize";
    case ErrorCode::unknown_file: return "UnknownFile";
    case ErrorCode::duplicate_replica: return "DuplicateReplica";
    case ErrorCode::unknown_replica: return "UnknownReplica";
    case ErrorCode::replica_pinned: return "ReplicaPinned";
    case ErrorCode::unknown_dataset: return "UnknownDataset";
    case ErrorCode::no_replica: return "NoReplica";
    case ErrorCode::already_cached: return "AlreadyCached";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::not_cached: return "NotCached";
    case ErrorCode::pin_underflow: return "PinUnderflow";
    case ErrorCode::unknown_group: return "UnknownGroup";
    case ErrorCode::unknown_station: return "UnknownStation";
    case ErrorCode::unknown_domain: return "UnknownDomain";
    case ErrorCode::would_create_loop: return "WouldCreateLoop";
    case ErrorCode::no_route: return "NoRoute";
    case ErrorCode::no_link: return "NoLink";
    case ErrorCode::stage_failed: return "StageFailed";
    case ErrorCode::already_archived: return "AlreadyArchived";
    case ErrorCode::not_archived: return "NotArchived";
    case ErrorCode::unknown_project: return "UnknownProject";
    case ErrorCode::unknown_consumer: return "UnknownConsumer";
    case ErrorCode::too_many_consumers: return "TooManyConsumers";
    case ErrorCode::not_held: return "NotHeld";
    case ErrorCode::consumer_busy: return "ConsumerBusy";
    case ErrorCode::negative_delay: return "NegativeDelay";
    case ErrorCode::negative_amount: return "NegativeAmount";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::unknown_entity: return "UnknownEntity";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace samdh
