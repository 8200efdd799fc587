// End-to-end: a scripted session against the real Python survey service.
//
// Spawns the service (160 items, 25% assignment => 40 items per session),
// drives a full session through the production client and session flow,
// saves the CSV export, and has a checker script confirm the export scores
// identically to the records read straight from the service's log.

import { ChildProcess, execFile, spawn } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { SurveyClient } from '../src/api';
import { runSession } from '../src/session';

const execFileAsync = promisify(execFile);
const PORT = 18731;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/export`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error('service did not start in time');
    await new Promise((r) => setTimeout(r, 200));
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), 'annotator-e2e-'));
  server = spawn(
    'python3',
    [join(__dirname, '..', 'scripts', 'e2e_server.py'),
     '--port', String(PORT), '--workdir', workdir],
    { stdio: ['ignore', 'pipe', 'inherit'] },
  );
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe('scripted session against the live service', () => {
  const rawPayloads: string[] = [];

  it('completes a 40-item assignment', async () => {
    // wrap fetch to capture every raw response body for the leak check
    const capturingFetch = async (url: string, init?: RequestInit) => {
      const resp = await fetch(url, init);
      const clone = resp.clone();
      try {
        rawPayloads.push(await clone.text());
      } catch {
        // non-text body; nothing to record
      }
      return resp;
    };
    const client = new SurveyClient(BASE, capturingFetch);
    const tasksSeen = new Set<string>();
    const result = await runSession(client, 'e2e-annotator', {
      onItem: async (state) => {
        tasksSeen.add(state.item.task);
        if (state.item.task === 'intrusion') {
          expect(state.item.words).toHaveLength(6);
          state.selection = 0; // pick the first displayed word
        } else {
          expect(state.item.words).toHaveLength(10);
          state.selection = 2; // "Somewhat related"
        }
        state.familiar = true;
      },
    });
    expect(result.answered).toBe(40);
    expect(tasksSeen).toEqual(new Set(['intrusion', 'rating']));

    const next = await client.nextItem(result.sessionId);
    expect(next).toEqual({ done: true });
  }, 60_000);

  it('never exposes the intruder position in any payload', () => {
    expect(rawPayloads.length).toBeGreaterThan(40);
    for (const payload of rawPayloads) {
      expect(payload).not.toContain('intruder');
      expect(payload).not.toContain('displayed_words');
    }
  });

  it('export holds one record per assigned item and scores like the raw log', async () => {
    const client = new SurveyClient(BASE);
    const csv = await client.exportCsv();
    const rows = csv.trim().split('\n');
    expect(rows[0]).toBe(
      'annotator_id,item_id,task,response,familiar,duration,submitted_at',
    );
    expect(rows).toHaveLength(41); // header + 40 records
    const exportPath = join(workdir, 'export.csv');
    writeFileSync(exportPath, csv);

    const { stdout } = await execFileAsync('python3', [
      join(__dirname, '..', 'scripts', 'e2e_check.py'),
      '--workdir', workdir,
      '--export', exportPath,
    ]);
    const verdict = JSON.parse(stdout);
    expect(verdict.equal).toBe(true);
    expect(verdict.n_exported).toBe(40);
    expect(verdict.n_injected).toBe(40);
    expect(verdict.orphans).toBe(0);
  }, 30_000);
});
