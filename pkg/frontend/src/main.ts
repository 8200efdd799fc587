import { SurveyClient } from './api';
import { runSession } from './session';
import { renderDone, renderInstructions, renderItem, renderProgress } from './ui';

async function start(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');
  const params = new URLSearchParams(window.location.search);
  const annotatorId = params.get('annotator') ?? `anon-${Date.now()}`;
  const baseUrl = params.get('service') ?? '';
  const client = new SurveyClient(baseUrl);

  const { answered } = await runSession(client, annotatorId, {
    onInstructions: (task) => renderInstructions(root, task),
    onProgress: (fraction) => renderProgress(root, fraction),
    onItem: (state) => renderItem(root, state),
  });
  renderDone(root, answered);
}

start().catch((err) => {
  const root = document.getElementById('app');
  if (root) {
    root.textContent = `Something went wrong: ${err}`;
  }
  console.error(err);
});
