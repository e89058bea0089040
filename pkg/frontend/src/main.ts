import { GatewayClient } from './api.js';
import { ReviewBoard } from './board.js';
import { DraftStore } from './drafts.js';

// same-origin by default (nfd serve --ui …); ?gateway=http://host:port
// points the board at a gateway served elsewhere.
const base = new URLSearchParams(location.search).get('gateway') ?? '';

const root = document.getElementById('app');
if (root) {
  const board = new ReviewBoard(root, new GatewayClient(base), new DraftStore(localStorage));
  void board.load();
}
