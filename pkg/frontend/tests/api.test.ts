import { describe, expect, it } from 'vitest';

import { ApiError, FetchLike, SubmitRequest, SurveyClient } from '../src/api';

const SUBMISSION: SubmitRequest = {
  item_id: 'int-0',
  response: 2,
  familiar: true,
  duration: 3.2,
};

function client(fetchImpl: FetchLike): SurveyClient {
  return new SurveyClient('http://svc', fetchImpl, [0, 0, 0]);
}

describe('SurveyClient', () => {
  it('creates sessions with the annotator id', async () => {
    let captured: unknown;
    const c = client(async (url, init) => {
      captured = { url, body: JSON.parse(init!.body as string) };
      return Response.json(
        { session_id: 's', annotator_id: 'ann', item_ids: [], started_at: 't' },
        { status: 201 },
      );
    });
    const session = await c.createSession('ann');
    expect(session.session_id).toBe('s');
    expect(captured).toEqual({
      url: 'http://svc/sessions',
      body: { annotator_id: 'ann' },
    });
  });

  it('surfaces HTTP errors as ApiError with status', async () => {
    const c = client(async () => new Response('nope', { status: 404 }));
    await expect(c.nextItem('ghost')).rejects.toMatchObject({
      name: 'ApiError',
      status: 404,
    });
  });

  it('retries submissions through transient network failures', async () => {
    let calls = 0;
    const c = client(async () => {
      calls += 1;
      if (calls < 3) throw new TypeError('fetch failed');
      return Response.json({ ok: true }, { status: 201 });
    });
    await expect(c.submitResponse('s', SUBMISSION)).resolves.toBeUndefined();
    expect(calls).toBe(3);
  });

  it('gives up after exhausting retries', async () => {
    let calls = 0;
    const c = client(async () => {
      calls += 1;
      throw new TypeError('fetch failed');
    });
    await expect(c.submitResponse('s', SUBMISSION)).rejects.toThrow('fetch failed');
    expect(calls).toBe(4); // initial attempt + 3 retries
  });

  it('treats 409 as already-recorded and resolves', async () => {
    let calls = 0;
    const c = client(async () => {
      calls += 1;
      return new Response('conflict', { status: 409 });
    });
    await expect(c.submitResponse('s', SUBMISSION)).resolves.toBeUndefined();
    expect(calls).toBe(1);
  });

  it('does not retry non-conflict HTTP errors', async () => {
    let calls = 0;
    const c = client(async () => {
      calls += 1;
      return new Response('bad value', { status: 422 });
    });
    await expect(c.submitResponse('s', SUBMISSION)).rejects.toBeInstanceOf(ApiError);
    expect(calls).toBe(1);
  });

  it('idempotent retry after a lost acknowledgement lands exactly once', async () => {
    // first attempt reaches the server but the response is lost; the retry
    // sees 409 because the record already exists, which counts as success
    let serverRecords = 0;
    let calls = 0;
    const c = client(async () => {
      calls += 1;
      if (calls === 1) {
        serverRecords += 1;
        throw new TypeError('socket closed mid-response');
      }
      return new Response('conflict', { status: 409 });
    });
    await expect(c.submitResponse('s', SUBMISSION)).resolves.toBeUndefined();
    expect(serverRecords).toBe(1);
  });

  it('exports CSV as text', async () => {
    const c = client(async () => new Response('header\nrow\n', { status: 200 }));
    expect(await c.exportCsv()).toBe('header\nrow\n');
  });
});
