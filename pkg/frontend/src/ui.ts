// DOM rendering: one item per screen, instructions gate, progress bar.

import { ItemState, INSTRUCTIONS, RATING_LABELS, canSubmit } from './session';

export function renderInstructions(
  root: HTMLElement,
  task: 'intrusion' | 'rating',
): Promise<void> {
  return new Promise((resolve) => {
    root.replaceChildren();
    const box = document.createElement('div');
    box.className = 'instructions';
    const heading = document.createElement('h2');
    heading.textContent =
      task === 'intrusion' ? 'Find the odd word out' : 'Rate the word set';
    const text = document.createElement('p');
    text.textContent = INSTRUCTIONS[task];
    const button = document.createElement('button');
    button.textContent = 'I understand, start';
    button.addEventListener('click', () => resolve(), { once: true });
    box.append(heading, text, button);
    root.appendChild(box);
  });
}

export function renderProgress(root: HTMLElement, fraction: number): void {
  let bar = root.querySelector<HTMLElement>('.progress');
  if (!bar) {
    bar = document.createElement('div');
    bar.className = 'progress';
    const fill = document.createElement('div');
    fill.className = 'progress-fill';
    bar.appendChild(fill);
    root.prepend(bar);
  }
  const fill = bar.querySelector<HTMLElement>('.progress-fill')!;
  fill.style.width = `${Math.round(fraction * 100)}%`;
}

function familiarityControl(state: ItemState, onChange: () => void): HTMLElement {
  const wrap = document.createElement('fieldset');
  const legend = document.createElement('legend');
  legend.textContent = 'Are you familiar with this subject area?';
  wrap.appendChild(legend);
  for (const [label, value] of [
    ['Yes', true],
    ['No', false],
  ] as const) {
    const radio = document.createElement('input');
    radio.type = 'radio';
    radio.name = 'familiar';
    radio.id = `familiar-${label}`;
    radio.addEventListener('change', () => {
      state.familiar = value;
      onChange();
    });
    const text = document.createElement('label');
    text.htmlFor = radio.id;
    text.textContent = label;
    wrap.append(radio, text);
  }
  return wrap;
}

/**
 * Render one item and resolve once the annotator has made both choices and
 * pressed submit. Words are shown exactly in the served order.
 */
export function renderItem(root: HTMLElement, state: ItemState): Promise<void> {
  return new Promise((resolve) => {
    const screen = document.createElement('div');
    screen.className = 'item';

    const submit = document.createElement('button');
    submit.textContent = 'Submit';
    submit.disabled = true;
    const refresh = () => {
      submit.disabled = !canSubmit(state);
    };

    const options = document.createElement('div');
    options.className = 'options';
    if (state.item.task === 'intrusion') {
      state.item.words.forEach((word, index) => {
        const button = document.createElement('button');
        button.className = 'word-option';
        button.textContent = word;
        button.addEventListener('click', () => {
          options
            .querySelectorAll('.word-option')
            .forEach((b) => b.classList.remove('selected'));
          button.classList.add('selected');
          state.selection = index;
          refresh();
        });
        options.appendChild(button);
      });
    } else {
      const wordList = document.createElement('p');
      wordList.className = 'word-list';
      wordList.textContent = state.item.words.join('  ');
      options.appendChild(wordList);
      RATING_LABELS.forEach((label, index) => {
        const button = document.createElement('button');
        button.className = 'rating-option';
        button.textContent = label;
        button.addEventListener('click', () => {
          options
            .querySelectorAll('.rating-option')
            .forEach((b) => b.classList.remove('selected'));
          button.classList.add('selected');
          state.selection = index + 1; // 1-3 ordinal
          refresh();
        });
        options.appendChild(button);
      });
    }

    submit.addEventListener('click', () => {
      if (!canSubmit(state)) return;
      submit.disabled = true; // no resubmission from this screen
      resolve();
    });

    screen.append(options, familiarityControl(state, refresh), submit);
    const old = root.querySelector('.item');
    if (old) old.remove();
    root.appendChild(screen);
  });
}

export function renderDone(root: HTMLElement, answered: number): void {
  root.replaceChildren();
  const p = document.createElement('p');
  p.textContent = `All done — ${answered} items answered. Thank you!`;
  root.appendChild(p);
}
