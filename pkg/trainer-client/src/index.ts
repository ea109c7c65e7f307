export {
  RewardClient,
  TransportError,
  ApplicationError,
  type Transport,
  type ClientOptions,
} from "./client.js";
